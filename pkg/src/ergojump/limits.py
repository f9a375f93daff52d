"""Autonomous limit objects reached when the fast dynamics are fully accelerated.

Two coupled descriptions: the pure-jump index process, whose holding time in
index i has CDF G(t * m_i) with m_i the stationary mean rate on component i,
and whose jump chain moves by drawing a pre-jump point from the rate-biased
stationary law and pushing it through the transition kernel; and the Markov
chain of positions at jump times, which shares those draws exactly (the index
chain is its projection).

Stationary summaries are either analytic (supplied by the model in closed
form) or estimated ergodically from a long fast-dynamics run with batch-means
error bars.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .core import (
    ABSORBED,
    CEMETERY_INDEX,
    ConfigurationError,
    FastModel,
    IndexedState,
    JumpClock,
    StationarySummary,
    TransitionKernel,
    as_seed_sequence,
    project_index,
)
from .engine import ABSORBED_TERM, HORIZON, MAX_JUMPS, PathRecord


@dataclass(frozen=True)
class ErgodicEstimate:
    """Time-average estimate with batch-means standard error.

    value is the average over the post-burn-in window; the standard error
    comes from splitting that window into equal time batches.
    """

    value: float
    run_length: float
    batch_se: float
    n_batches: int
    burn_in_fraction: float


@dataclass(frozen=True)
class LimitSpec:
    """The limit process: per-index stationary summaries plus the jump kernel.

    ``summary_for`` maps an index to its StationarySummary; the clock is the
    one shared with the prelimit model.  ``analytic_rows``, when available,
    maps an index to the closed-form index-transition row {j: prob}.
    ``explosive`` is an optional analytic verdict on whether the limit index
    process explodes (accumulates infinitely many jumps in finite time).
    """

    name: str
    clock: JumpClock
    summary_for: Callable[[Any], StationarySummary]
    kernel: TransitionKernel
    analytic_rows: Callable[[Any], dict] | None = None
    explosive: bool | None = None

    def mean_rate(self, index) -> float:
        return self.summary_for(index).mean_rate


def limit_table_json(spec: LimitSpec, indices) -> dict:
    """JSON view of a limit spec: per-index mean-rate table with provenance.

    Ergodically estimated entries carry their run diagnostics; the table
    covers the caller-supplied index collection (index sets may be infinite).
    """
    table = {}
    for index in indices:
        summary = spec.summary_for(index)
        entry = {"mean_rate": summary.mean_rate, "provenance": summary.provenance}
        if summary.estimate is not None:
            est = summary.estimate
            entry["estimate"] = {
                "run_length": est.run_length,
                "batch_se": est.batch_se,
                "n_batches": est.n_batches,
                "burn_in_fraction": est.burn_in_fraction,
            }
        table[str(index)] = entry
    return {
        "name": spec.name,
        "clock": spec.clock.name,
        "explosive": spec.explosive,
        "mean_rates": table,
    }


def trace_fast_path(fm: FastModel, run_length: float, rng, grid_dt: float = 1e-2):
    """Occupation trace of one fast-dynamics run: (points, durations, rates).

    The rate is re-evaluated pointwise through the model's rate function, not
    read off the segments, so estimates built from the trace are independent
    of the dynamics' own rate bookkeeping.  Segment-constant stretches enter
    as whole holding intervals (durations are then exact); varying-rate
    segments are chopped on the ``grid_dt`` grid.
    """
    points, durations, rates = [], [], []
    t = 0.0
    fn = fm.rate.fn
    seg_const = fm.rate.is_segment_constant(fm.index)
    state = IndexedState(fm.index, fm.start_point)
    for duration, _bseg, point, point_fn in fm.dynamics.segments(state, rng):
        span = min(duration, run_length - t)
        if span <= 0:
            break
        if seg_const:
            p = point_fn(0.0) if point_fn is not None else point
            points.append(p)
            durations.append(span)
            rates.append(fn(fm.index, p))
        else:
            m = max(1, int(math.ceil(span / grid_dt)))
            h = span / m
            for j in range(m):
                p = point_fn((j + 0.5) * h) if point_fn is not None else point
                points.append(p)
                durations.append(h)
                rates.append(fn(fm.index, p))
        t += span
        if t >= run_length:
            break
    return points, np.asarray(durations), np.asarray(rates)


def _batch_means(values: np.ndarray, weights: np.ndarray, n_batches: int):
    """Weighted batch means over equal cumulative-weight batches."""
    total = float(weights.sum())
    if total <= 0:
        return math.nan, math.nan
    edges = np.linspace(0.0, total, n_batches + 1)
    cum = np.concatenate(([0.0], np.cumsum(weights)))
    batch_vals = []
    integral = np.concatenate(([0.0], np.cumsum(values * weights)))
    for k in range(n_batches):
        lo, hi = edges[k], edges[k + 1]
        # integral of values over cumulative-weight window [lo, hi]
        i_lo = np.interp(lo, cum, integral)
        i_hi = np.interp(hi, cum, integral)
        batch_vals.append((i_hi - i_lo) / (hi - lo))
    batch_vals = np.asarray(batch_vals)
    return float(batch_vals.mean()), float(batch_vals.std(ddof=1) / math.sqrt(n_batches))


def ergodic_average(
    fm: FastModel,
    h_fn: Callable[[Any], float],
    run_length: float,
    seed,
    burn_in: float = 0.1,
    n_batches: int = 20,
    grid_dt: float = 1e-2,
) -> ErgodicEstimate:
    """Estimate the stationary average of h along the fast dynamics.

    Defaults follow standard batch-means practice: 10% burn-in, 20 batches.
    """
    rng = np.random.default_rng(as_seed_sequence(seed))
    points, durations, _rates = trace_fast_path(fm, run_length, rng, grid_dt)
    t_edges = np.concatenate(([0.0], np.cumsum(durations)))
    keep = t_edges[1:] > burn_in * run_length
    points = [p for p, k in zip(points, keep) if k]
    durations = durations[keep]
    values = np.array([h_fn(p) for p in points], dtype=float)
    mean, se = _batch_means(values, durations, n_batches)
    return ErgodicEstimate(
        value=mean,
        run_length=run_length,
        batch_se=se,
        n_batches=n_batches,
        burn_in_fraction=burn_in,
    )


def stationary_rate(
    fm: FastModel,
    method: str = "analytic",
    run_length: float | None = None,
    seed=0,
    burn_in: float = 0.1,
    n_batches: int = 20,
    grid_dt: float = 1e-2,
) -> StationarySummary:
    """Stationary mean jump rate of one component, analytic or estimated.

    The ergodic method runs the fast dynamics for ``run_length`` time units,
    reports the time average of b with batch-means diagnostics, and builds the
    rate-biased sampler by multinomial resampling of the occupation trace with
    weights b * duration (exact for holding-interval traces as the trace length
    grows; the weights are the trace's rate mass).
    """
    if method == "analytic":
        if fm.analytic_summary is None:
            raise ConfigurationError(
                f"model has no closed-form stationary summary for index {fm.index!r}"
            )
        return fm.analytic_summary
    if method != "ergodic":
        raise ConfigurationError(f"unknown stationary_rate method {method!r}")
    if run_length is None or run_length <= 0:
        raise ConfigurationError("ergodic estimation needs a positive run_length")

    rng = np.random.default_rng(as_seed_sequence(seed))
    points, durations, rates = trace_fast_path(fm, run_length, rng, grid_dt)
    t_edges = np.concatenate(([0.0], np.cumsum(durations)))
    keep = t_edges[1:] > burn_in * run_length
    points = [p for p, k in zip(points, keep) if k]
    durations = durations[keep]
    rates = rates[keep]

    mean, se = _batch_means(rates, durations, n_batches)
    estimate = ErgodicEstimate(mean, run_length, se, n_batches, burn_in)

    weights = rates * durations
    total = float(weights.sum())
    if total <= 0:
        declared = fm.analytic_summary.mean_rate if fm.analytic_summary else None
        if declared and declared > 0:
            warnings.warn(
                f"ergodic run at index {fm.index!r} observed zero rate mass but the "
                f"declared stationary rate is {declared}; lengthen the run",
                stacklevel=2,
            )
        return StationarySummary(
            index=fm.index,
            mean_rate=0.0,
            biased_sampler=None,
            provenance="ergodic-estimate",
            estimate=estimate,
        )

    cum = np.cumsum(weights) / total

    def biased_sampler(sample_rng, _points=points, _cum=cum):
        return _points[int(np.searchsorted(_cum, sample_rng.random()))]

    return StationarySummary(
        index=fm.index,
        mean_rate=max(mean, 0.0),
        biased_sampler=biased_sampler,
        provenance="ergodic-estimate",
        estimate=estimate,
    )


def biased_stationary_sample(summary: StationarySummary, rng):
    """Draw a point from the stationary law reweighted by the jump rate."""
    if summary.mean_rate <= 0:
        raise ConfigurationError(
            f"index {summary.index!r} has zero stationary rate; no biased law exists"
        )
    return summary.biased_sampler(rng)


def _draw_open_uniform(rng) -> float:
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    return u


def sample_limit_jump_time(spec: LimitSpec, index, rng) -> float:
    """Holding time of the limit index process in ``index``; +inf at zero rate."""
    mean_rate = spec.mean_rate(index)
    if mean_rate <= 0:
        return math.inf
    return spec.clock.inverse(_draw_open_uniform(rng)) / mean_rate


def _jump_from_index(spec: LimitSpec, index, rng):
    """One coupled step: biased pre-jump point, then the transition kernel."""
    summary = spec.summary_for(index)
    point = biased_stationary_sample(summary, rng)
    return spec.kernel.sample(IndexedState(index, point), rng)


def step_chain_y(spec: LimitSpec, state, rng):
    """One step of the limit Markov chain of positions at jump times.

    From the absorbed state, or from an index with zero stationary rate, the
    chain moves to the absorbed state.
    """
    if state is ABSORBED:
        return ABSORBED
    if spec.mean_rate(state.index) <= 0:
        return ABSORBED
    return _jump_from_index(spec, state.index, rng)


def step_jump_chain(spec: LimitSpec, index, rng):
    """Next index of the limit jump chain; faults at zero stationary rate.

    Shares its draws with step_chain_y: from the same RNG position both
    produce the same pre-jump point and kernel output, so the index returned
    here is exactly the projection of the chain step.
    """
    if spec.mean_rate(index) <= 0:
        raise ConfigurationError(
            f"limit jump chain undefined at index {index!r}: zero stationary rate"
        )
    return project_index(_jump_from_index(spec, index, rng))


def simulate_limit_path(
    spec: LimitSpec, i0, horizon: float, max_jumps: int, seed
) -> PathRecord:
    """Simulate the limit index process; record shape matches the engine.

    Index-only states (no point payloads); n is recorded as 0 to mark a limit
    path.  Termination taxonomy is shared: horizon, absorbed, or the max-jumps
    guard (read downstream as explosion evidence).
    """
    if horizon <= 0 or max_jumps < 1:
        raise ConfigurationError("horizon must be positive and max_jumps >= 1")
    ss = as_seed_sequence(seed)
    u_rng, chain_rng = (np.random.default_rng(c) for c in ss.spawn(2))

    rec = PathRecord(n=0, seed=ss.entropy, start_index=i0)
    rec.thresholds = []
    inverse = spec.clock.inverse

    # block-drawn uniforms for the holding times; chains with tens of
    # thousands of jumps (explosive limits) dominate the cost otherwise
    buf = u_rng.random(512)
    pos = 0

    summary_for = spec.summary_for
    kernel_sample = spec.kernel.sample
    index = i0
    t = 0.0
    while True:
        if rec.jumps >= max_jumps:
            rec.termination = MAX_JUMPS
            rec.final_time = t
            rec.final_index = index
            return rec
        summary = summary_for(index)
        mean_rate = summary.mean_rate
        if mean_rate <= 0:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index = index
            return rec
        u = buf[pos]
        pos += 1
        if pos == buf.shape[0]:
            buf = u_rng.random(512)
            pos = 0
        while u <= 0.0:
            u = float(u_rng.random())
        theta = inverse(u)
        t_next = t + theta / mean_rate
        if t_next > horizon:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index = index
            return rec
        t = t_next
        point = summary.biased_sampler(chain_rng)
        post = kernel_sample(IndexedState(index, point), chain_rng)
        rec.jump_times.append(t)
        rec.pre_jump_indices.append(index)
        rec.thresholds.append(theta)
        if post is ABSORBED:
            rec.post_jump_indices.append(CEMETERY_INDEX)
            rec.termination = ABSORBED_TERM
            rec.final_time = t
            rec.final_index = CEMETERY_INDEX
            return rec
        index = post.index
        rec.post_jump_indices.append(index)
