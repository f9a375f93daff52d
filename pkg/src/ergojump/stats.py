"""Statistical harness: distances between accelerated-process laws and limit laws.

The convergence statements under test are limits without rates, so every
check is a distance at finite acceleration with a budgeted tolerance: KS for
jump-time laws (with never-jumped mass treated as a censored atom at the
horizon), total variation for index-valued laws (against analytic rows where
closed forms exist, otherwise two-sample against the limit sampler), and
Wilson intervals for event fractions.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import CEMETERY_INDEX, ConfigurationError, FastModel
from .engine import (
    MAX_JUMPS,
    EngineConfig,
    PathRecord,
    brute_force_path,
    format_index,
    simulate_path,
)
from .limits import ErgodicEstimate, ergodic_average, simulate_limit_path
from .models import BuiltModel
from .parallel import map_replicas

Z_99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass
class EmpiricalLaw:
    """Sorted real samples (with a censored-at-infinity count) or category counts."""

    kind: str  # "real" | "categorical"
    size: int
    samples: np.ndarray | None = None
    censored: int = 0
    counts: Counter | None = None
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, values, provenance=None):
        values = np.asarray(values, dtype=float)
        finite = np.sort(values[np.isfinite(values)])
        return cls(
            kind="real",
            size=values.size,
            samples=finite,
            censored=int(values.size - finite.size),
            provenance=provenance or {},
        )

    @classmethod
    def from_categories(cls, items, provenance=None):
        counts = Counter(items)
        return cls(
            kind="categorical",
            size=sum(counts.values()),
            counts=counts,
            provenance=provenance or {},
        )


@dataclass
class TestReport:
    """One statistic with its threshold and verdict; pass iff value <= threshold."""

    name: str
    statistic: str  # "ks" | "two-sample-ks" | "tv" | "chi-square" | "fraction"
    value: float
    threshold: float
    passed: bool
    sample_sizes: tuple
    seed: Any = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "value": self.value,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "sample_sizes": list(self.sample_sizes),
            "seed": self.seed,
            "details": self.details,
        }


def ks_critical(alpha: float, n: int) -> float:
    """Asymptotic one-sample KS critical value c(alpha)/sqrt(n)."""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) / math.sqrt(n)


def ks_two_sample_critical(alpha: float, n: int, m: int) -> float:
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) * math.sqrt((n + m) / (n * m))


def ks_statistic(law: EmpiricalLaw, cdf, horizon: float | None = None) -> float:
    """sup_t |F_hat - F| over [0, horizon], censored mass compared at the horizon."""
    n = law.size
    if n == 0:
        raise ConfigurationError("empty sample")
    xs = law.samples
    d = 0.0
    if xs.size:
        F = np.array([cdf(float(x)) for x in xs])
        hi = np.arange(1, xs.size + 1) / n
        lo = np.arange(0, xs.size) / n
        d = float(max(np.max(np.abs(hi - F)), np.max(np.abs(F - lo))))
    if law.censored or horizon is not None:
        if horizon is None:
            raise ConfigurationError("censored samples need an explicit horizon")
        d = max(d, abs(xs.size / n - cdf(float(horizon))))
    return d


def ks_against_cdf(
    samples,
    cdf,
    alpha: float = 0.01,
    horizon: float | None = None,
    threshold: float | None = None,
    name: str = "ks",
    seed=None,
) -> TestReport:
    """One-sample KS test of real samples (inf = censored) against a CDF."""
    law = samples if isinstance(samples, EmpiricalLaw) else EmpiricalLaw.from_samples(samples)
    if law.size < 100:
        raise ConfigurationError(f"KS test needs >= 100 samples, got {law.size}")
    value = ks_statistic(law, cdf, horizon)
    thr = ks_critical(alpha, law.size) if threshold is None else threshold
    return TestReport(
        name=name,
        statistic="ks",
        value=value,
        threshold=thr,
        passed=value <= thr,
        sample_sizes=(law.size,),
        seed=seed,
        details={"alpha": alpha, "censored": law.censored},
    )


def two_sample_ks(
    a, b, alpha: float = 0.01, threshold: float | None = None, name: str = "two-sample-ks"
) -> TestReport:
    """Two-sample KS on finite samples (censored tails must match horizons)."""
    la = a if isinstance(a, EmpiricalLaw) else EmpiricalLaw.from_samples(a)
    lb = b if isinstance(b, EmpiricalLaw) else EmpiricalLaw.from_samples(b)
    grid = np.concatenate([la.samples, lb.samples])
    grid.sort()
    Fa = np.searchsorted(la.samples, grid, side="right") / la.size
    Fb = np.searchsorted(lb.samples, grid, side="right") / lb.size
    value = float(np.max(np.abs(Fa - Fb))) if grid.size else abs(
        la.censored / la.size - lb.censored / lb.size
    )
    value = max(value, abs(la.censored / la.size - lb.censored / lb.size))
    thr = ks_two_sample_critical(alpha, la.size, lb.size) if threshold is None else threshold
    return TestReport(
        name=name,
        statistic="two-sample-ks",
        value=value,
        threshold=thr,
        passed=value <= thr,
        sample_sizes=(la.size, lb.size),
        details={"alpha": alpha},
    )


def tv_distance(counts_a, counts_b) -> float:
    """Total variation between two empirical categorical laws."""
    na = sum(counts_a.values())
    nb = sum(counts_b.values())
    if na == 0 or nb == 0:
        raise ConfigurationError("empty categorical sample")
    keys = set(counts_a) | set(counts_b)
    return 0.5 * sum(abs(counts_a.get(k, 0) / na - counts_b.get(k, 0) / nb) for k in keys)


def tv_to_probs(counts, probs: dict, merge_unseen: bool = True) -> float:
    """TV between empirical counts and a probability row.

    Categories absent from the row are merged into one "other" bucket before
    comparing (the row's own mass outside the observed support stays put).
    """
    n = sum(counts.values())
    if n == 0:
        raise ConfigurationError("empty categorical sample")
    if merge_unseen:
        other = sum(v for k, v in counts.items() if k not in probs) / n
        d = sum(abs(counts.get(k, 0) / n - p) for k, p in probs.items())
        return 0.5 * (d + other)
    keys = set(counts) | set(probs)
    return 0.5 * sum(abs(counts.get(k, 0) / n - probs.get(k, 0.0)) for k in keys)


def wilson_interval(successes: int, n: int, z: float = Z_99):
    """Wilson score interval; defaults to the 99% level."""
    if n <= 0:
        raise ConfigurationError("Wilson interval needs n >= 1")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def chi_square_gof(counts, probs: dict) -> tuple[float, int]:
    """Chi-square statistic and dof of counts against a probability row."""
    n = sum(counts.values())
    stat = 0.0
    dof = -1
    for k, p in probs.items():
        expected = n * p
        if expected > 0:
            stat += (counts.get(k, 0) - expected) ** 2 / expected
            dof += 1
    return stat, max(dof, 1)


# ---------------------------------------------------------------------------
# replica plumbing


def _start_and_path_seed(model: BuiltModel, seed):
    start_ss, path_ss = seed.spawn(2)
    start = model.start_sampler(np.random.default_rng(start_ss))
    return start, path_ss


def run_path(model: BuiltModel, n: int, config: EngineConfig, seed) -> PathRecord:
    """One engine replica: draw the start state, then simulate."""
    start, path_ss = _start_and_path_seed(model, seed)
    return simulate_path(model.spec, n, start, config, path_ss)


def run_limit_path(model: BuiltModel, horizon, max_jumps, seed) -> PathRecord:
    start, path_ss = _start_and_path_seed(model, seed)
    return simulate_limit_path(model.limit, start.index, horizon, max_jumps, path_ss)


# ---------------------------------------------------------------------------
# convergence experiments


def jump_time_convergence(
    model: BuiltModel,
    n_grid,
    replicas: int,
    horizon: float,
    seed: int,
    alpha: float = 0.01,
    thresholds: dict | None = None,
    workers: int = 1,
) -> list[TestReport]:
    """KS distance of the first jump time to the limit law, swept over n.

    The limit CDF is t -> G(t * m_i) for the start index i; paths that never
    jump before the horizon contribute censored mass there.
    """
    limit = model.limit
    start_index = model.start_sampler(np.random.default_rng(0)).index
    mean_rate = limit.mean_rate(start_index)
    clock_cdf = limit.clock.cdf
    limit_cdf = lambda t: clock_cdf(t * mean_rate)
    config = EngineConfig(horizon=horizon, max_jumps=1, record_points=False)

    reports = []
    for n in n_grid:
        def tau1(_r, rseed, n=n):
            rec = run_path(model, n, config, rseed)
            return rec.jump_times[0] if rec.jumps else math.inf

        taus = map_replicas(tau1, replicas, seed + 7919 * n, workers)
        thr = None if thresholds is None else thresholds.get(n)
        rep = ks_against_cdf(
            taus,
            limit_cdf,
            alpha=alpha,
            horizon=horizon,
            threshold=thr,
            name=f"{model.name}: first-jump-time KS at n={n}",
            seed=seed,
        )
        rep.details.update({"n": n, "mean_rate": mean_rate})
        reports.append(rep)
    return reports


def _windowed_chain(rec: PathRecord, n_jumps: int, windows) -> tuple:
    """Joint category of the first jumps' indices under inter-jump windows.

    A path whose k-th inter-jump gap misses its window (or which never makes
    the k-th jump) lands in the category ("censored", k).
    """
    prev = 0.0
    out = []
    for k in range(n_jumps):
        if k >= rec.jumps or rec.jump_times[k] - prev > windows[k]:
            return ("censored", k)
        out.append(rec.post_jump_indices[k])
        prev = rec.jump_times[k]
    return tuple(out)


def jump_chain_convergence(
    model: BuiltModel,
    n: int,
    n_jumps: int,
    windows,
    replicas: int,
    seed: int,
    tv_threshold: float = 0.02,
    workers: int = 1,
) -> list[TestReport]:
    """Joint law of the first jump indices under windows, prelimit vs limit MC.

    Adds one report per analytic first-step row (per start index) when the
    model carries closed-form rows.
    """
    if n_jumps > 5:
        raise ConfigurationError("joint chain comparison is meant for <= 5 jumps")
    windows = list(windows)
    if len(windows) != n_jumps:
        raise ConfigurationError("one window per jump is required")
    horizon = sum(windows) + 1e-9
    config = EngineConfig(horizon=horizon, max_jumps=n_jumps, record_points=False)

    def pre_task(_r, rseed):
        return _windowed_chain(run_path(model, n, config, rseed), n_jumps, windows)

    def lim_task(_r, rseed):
        return _windowed_chain(
            run_limit_path(model, horizon, n_jumps, rseed), n_jumps, windows
        )

    pre = Counter(map_replicas(pre_task, replicas, seed, workers))
    lim = Counter(map_replicas(lim_task, replicas, seed + 1, workers))
    value = tv_distance(pre, lim)
    reports = [
        TestReport(
            name=f"{model.name}: joint jump-chain TV at n={n} ({n_jumps} jumps)",
            statistic="tv",
            value=value,
            threshold=tv_threshold,
            passed=value <= tv_threshold,
            sample_sizes=(replicas, replicas),
            seed=seed,
            details={"n": n, "windows": windows},
        )
    ]

    if model.limit.analytic_rows is not None:
        first = Counter()
        for cat, cnt in pre.items():
            if cat and cat[0] != "censored":
                first[cat[0]] += cnt
        start_index = model.start_sampler(np.random.default_rng(0)).index
        row = model.limit.analytic_rows(start_index)
        n_first = sum(first.values())
        value = tv_to_probs(first, row)
        reports.append(
            TestReport(
                name=f"{model.name}: first-step row TV vs analytic (from {format_index(start_index)})",
                statistic="tv",
                value=value,
                threshold=tv_threshold,
                passed=value <= tv_threshold,
                sample_sizes=(n_first,),
                seed=seed,
                details={"n": n, "row_from": format_index(start_index)},
            )
        )
    return reports


def fixed_time_marginal_test(
    model: BuiltModel,
    times,
    n: int,
    k_guard: int,
    replicas: int,
    seed: int,
    tv_threshold: float = 0.02,
    workers: int = 1,
) -> list[TestReport]:
    """TV of index marginals at fixed times, prelimit vs limit MC, under a guard.

    The guard keeps only paths whose k_guard-th jump (if any) happens after
    the last time; its empirical probability is reported, with a warning when
    it drops below 0.5 (test power degrades).
    """
    times = sorted(times)
    if not times or times[0] <= 0:
        raise ConfigurationError("times must be strictly positive and nonempty")
    horizon = times[-1]
    config = EngineConfig(horizon=horizon, max_jumps=k_guard, record_points=False)

    def observe(rec: PathRecord):
        if rec.termination == MAX_JUMPS and rec.final_time < horizon:
            return None  # guard event failed
        return tuple(rec.index_at(t) for t in times)

    def pre_task(_r, rseed):
        return observe(run_path(model, n, config, rseed))

    def lim_task(_r, rseed):
        return observe(run_limit_path(model, horizon, k_guard, rseed))

    pre_all = map_replicas(pre_task, replicas, seed, workers)
    lim_all = map_replicas(lim_task, replicas, seed + 1, workers)
    guard_pre = sum(1 for x in pre_all if x is not None) / replicas
    guard_lim = sum(1 for x in lim_all if x is not None) / replicas
    if min(guard_pre, guard_lim) < 0.5:
        warnings.warn(
            f"guard event probability {min(guard_pre, guard_lim):.3f} < 0.5; "
            "fixed-time marginal comparison has degraded power",
            stacklevel=2,
        )

    reports = []
    for j, t in enumerate(times):
        pre = Counter(x[j] for x in pre_all if x is not None)
        lim = Counter(x[j] for x in lim_all if x is not None)
        value = tv_distance(pre, lim)
        reports.append(
            TestReport(
                name=f"{model.name}: index marginal TV at T={t:g}, n={n}",
                statistic="tv",
                value=value,
                threshold=tv_threshold,
                passed=value <= tv_threshold,
                sample_sizes=(sum(pre.values()), sum(lim.values())),
                seed=seed,
                details={
                    "n": n,
                    "time": t,
                    "k_guard": k_guard,
                    "guard_prob_prelimit": guard_pre,
                    "guard_prob_limit": guard_lim,
                },
            )
        )
    return reports


def explosion_gap(
    model: BuiltModel,
    T: float,
    n: int,
    max_jumps: int,
    replicas: int,
    seed: int,
    workers: int = 1,
) -> dict:
    """Fractions of paths accumulating max_jumps jumps before T, prelimit vs limit.

    The guard tag is the operational explosion surrogate; Wilson 99% intervals
    quantify both fractions.  An analytic explosion verdict, when the model
    carries one, is echoed for context.
    """
    config = EngineConfig(horizon=T, max_jumps=max_jumps, record_points=False)

    def pre_task(_r, rseed):
        return run_path(model, n, config, rseed).termination == MAX_JUMPS

    def lim_task(_r, rseed):
        return run_limit_path(model, T, max_jumps, rseed).termination == MAX_JUMPS

    pre_hits = sum(map_replicas(pre_task, replicas, seed, workers))
    lim_hits = sum(map_replicas(lim_task, replicas, seed + 1, workers))
    return {
        "T": T,
        "n": n,
        "max_jumps": max_jumps,
        "replicas": replicas,
        "prelimit_fraction": pre_hits / replicas,
        "prelimit_ci99": wilson_interval(pre_hits, replicas),
        "limit_fraction": lim_hits / replicas,
        "limit_ci99": wilson_interval(lim_hits, replicas),
        "analytic_explosive": model.limit.explosive,
    }


def extinction_probability(outcomes, max_jumps_warn: float = 0.05) -> dict:
    """Extinction estimate with Wilson 99% CI from path outcomes.

    ``outcomes`` is an iterable of PathRecord or (final_index, termination)
    pairs; a path is extinct when its final index is 0 (or it was absorbed),
    anything else counts as survival.  Warns when more than 5% of the paths
    ended on the max-jumps guard (their classification leans on the final
    population being far from 0, which the caller should have arranged).
    """
    extinct = 0
    total = 0
    guard_hits = 0
    for out in outcomes:
        if isinstance(out, PathRecord):
            final_index, termination = out.final_index, out.termination
        else:
            final_index, termination = out
        total += 1
        if termination == MAX_JUMPS:
            guard_hits += 1
        if final_index == 0 or final_index is CEMETERY_INDEX or final_index == "cemetery":
            extinct += 1
    if total == 0:
        raise ConfigurationError("no paths supplied")
    guard_fraction = guard_hits / total
    if guard_fraction > max_jumps_warn:
        warnings.warn(
            f"{guard_fraction:.1%} of paths hit the max-jumps guard; extinction "
            "classification treats them as survival",
            stacklevel=2,
        )
    lo, hi = wilson_interval(extinct, total)
    return {
        "estimate": extinct / total,
        "ci99": (lo, hi),
        "extinct": extinct,
        "replicas": total,
        "max_jumps_fraction": guard_fraction,
    }


def ergodic_diagnostic(
    fm: FastModel,
    functional,
    run_lengths,
    seed: int = 0,
    stabilize_se: float = 5.0,
) -> dict:
    """Time-average estimates at increasing run lengths, with a stability flag.

    Flags the sequence when the last two estimates differ by more than
    ``stabilize_se`` pooled standard errors.
    """
    estimates: list[ErgodicEstimate] = []
    for k, length in enumerate(run_lengths):
        estimates.append(ergodic_average(fm, functional, length, (seed, k)))
    stabilized = True
    if len(estimates) >= 2:
        a, b = estimates[-2], estimates[-1]
        pooled = math.hypot(a.batch_se, b.batch_se)
        if pooled > 0 and abs(a.value - b.value) > stabilize_se * pooled:
            stabilized = False
    return {"estimates": estimates, "stabilized": stabilized}


def oracle_equivalence(
    model: BuiltModel,
    replicas: int,
    seed: int,
    dt: float = 1e-4,
    horizon: float = 8.0,
    bins: int = 20,
    tv_threshold: float = 0.01,
    workers: int = 1,
) -> TestReport:
    """TV between engine and fixed-step oracle laws of (tau_1 bin, first index).

    Runs both simulators at n=1 to the first jump, bins tau_1 into ``bins``
    quantile bins of the pooled finite samples, and compares the joint law
    with the first post-jump index (never-jumped paths form their own
    category).  Both sides share replica seeds (common random numbers): the
    seed discipline couples the threshold, fast-path, and kernel substreams,
    so the empirical TV isolates the oracle's O(dt) discretization shift
    instead of drowning it in two-sample multinomial noise.
    """
    config = EngineConfig(horizon=horizon, max_jumps=1, record_points=False)

    def engine_task(_r, rseed):
        rec = run_path(model, 1, config, rseed)
        if not rec.jumps:
            return (math.inf, None)
        return (rec.jump_times[0], format_index(rec.post_jump_indices[0]))

    def oracle_task(_r, rseed):
        start, path_ss = _start_and_path_seed(model, rseed)
        rec = brute_force_path(model.spec, 1, start, dt, horizon, path_ss, max_jumps=1)
        if not rec.jumps:
            return (math.inf, None)
        return (rec.jump_times[0], format_index(rec.post_jump_indices[0]))

    eng = map_replicas(engine_task, replicas, seed, workers)
    orc = map_replicas(oracle_task, replicas, seed, workers)

    finite = np.array([t for t, _ in eng + orc if math.isfinite(t)])
    if finite.size == 0:
        raise ConfigurationError("no jumps observed; lengthen the horizon")
    edges = np.quantile(finite, np.linspace(0.0, 1.0, bins + 1)[1:-1])

    def categorize(pairs):
        out = Counter()
        for t, idx in pairs:
            if not math.isfinite(t):
                out[("censored",)] += 1
            else:
                out[(int(np.searchsorted(edges, t)), idx)] += 1
        return out

    value = tv_distance(categorize(eng), categorize(orc))
    return TestReport(
        name=f"{model.name}: engine vs fixed-step oracle TV (dt={dt:g})",
        statistic="tv",
        value=value,
        threshold=tv_threshold,
        passed=value <= tv_threshold,
        sample_sizes=(replicas, replicas),
        seed=seed,
        details={"dt": dt, "bins": bins, "horizon": horizon},
    )
