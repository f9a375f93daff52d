"""Event-driven simulation of the accelerated jump process.

A path is built by piecing out: run the fast dynamics from the current state,
accumulate the rate integral A(t) = int_0^t b, jump when A first reaches the
clock threshold G^{-1}(U), draw the new state from the transition kernel, and
repeat.  Acceleration by n means the fast path at slow time t is the base
path at time n*t; segment durations shrink by n while rate values are
unchanged.

``brute_force_path`` is an independent oracle for the same law: it discretizes
the definition of the jump time directly on a fixed grid (advance by dt,
accumulate A += b*dt, jump at the first grid point where G(A) >= U).  It never
uses the clock's inverse and re-evaluates b pointwise through the rate
function, ignoring the rate values carried by segments.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

from .core import (
    ABSORBED,
    CEMETERY_INDEX,
    ConfigurationError,
    IndexedState,
    SemiMarkovSpec,
    as_seed_sequence,
)

HORIZON = "horizon"
ABSORBED_TERM = "absorbed"
MAX_JUMPS = "max-jumps"

TERMINATIONS = (HORIZON, ABSORBED_TERM, MAX_JUMPS)


@dataclass(frozen=True)
class EngineConfig:
    """Simulation bounds and integration controls.

    horizon      -- slow-clock end time T > 0.
    max_jumps    -- explosion guard: a path is cut (and tagged) after this many
                    jumps; downstream statistics read the tag as explosion
                    evidence, never as silent truncation.
    dt           -- slow-time quadrature step for segments whose rate varies
                    continuously; the crossing inside such a segment is located
                    by linear interpolation of the trapezoid accumulator,
                    accurate to O(dt).
    eps_cross    -- tolerance quoted by the threshold-consistency guarantee for
                    segment-constant rates (exact up to float rounding).
    record_points -- keep pre/post-jump point payloads on the record; index
                    information is always kept.  Large-population ensembles
                    turn this off to bound memory.
    """

    horizon: float
    max_jumps: int = 10**6
    dt: float = 1e-3
    eps_cross: float = 1e-9
    record_points: bool = True

    def __post_init__(self):
        if self.horizon <= 0 or self.max_jumps < 1 or self.dt <= 0 or self.eps_cross <= 0:
            raise ConfigurationError(f"invalid engine config {self}")


@dataclass
class PathRecord:
    """One simulated trajectory: jump times, states around each jump, outcome.

    ``index_path`` encodes the piecewise-constant index trajectory as
    (time, index-after-time) knots starting at (0, start index).  Point
    payloads are present when the engine ran with record_points; the index
    lists are always populated.  ``thresholds``/``accumulated`` hold, per
    jump, the clock threshold drawn for the epoch and the rate integral
    accumulated when it was reached (event-driven engine only).
    """

    n: int
    seed: Any
    start_index: Any
    jump_times: list = field(default_factory=list)
    pre_jump_indices: list = field(default_factory=list)
    post_jump_indices: list = field(default_factory=list)
    pre_jump_points: list | None = None
    post_jump_points: list | None = None
    thresholds: list | None = None
    accumulated: list | None = None
    termination: str = HORIZON
    final_time: float = 0.0
    final_index: Any = None
    final_point: Any = None

    @property
    def jumps(self) -> int:
        return len(self.jump_times)

    @property
    def index_path(self):
        return [(0.0, self.start_index)] + list(zip(self.jump_times, self.post_jump_indices))

    def index_at(self, t: float):
        """Index occupied at time t (right-continuous, like the process)."""
        k = bisect_right(self.jump_times, t)
        return self.start_index if k == 0 else self.post_jump_indices[k - 1]

    @property
    def pre_jump_states(self):
        if self.pre_jump_points is None:
            raise ValueError("points were not recorded for this path")
        return [IndexedState(i, p) for i, p in zip(self.pre_jump_indices, self.pre_jump_points)]

    @property
    def post_jump_states(self):
        if self.post_jump_points is None:
            raise ValueError("points were not recorded for this path")
        return [
            ABSORBED if p is ABSORBED else IndexedState(i, p)
            for i, p in zip(self.post_jump_indices, self.post_jump_points)
        ]

    @property
    def final_state(self):
        if self.final_point is ABSORBED:
            return ABSORBED
        return IndexedState(self.final_index, self.final_point)


def accelerate(fast: Iterator[tuple], n: int) -> Iterator[tuple]:
    """Time-accelerate a fast-path segment stream by an integer factor n.

    The returned stream's path at time t equals the base path at time n*t:
    durations are divided by n, rate values are unchanged.  n = 1 returns the
    stream itself, path-for-path identical under the same RNG stream.
    """
    if n < 1:
        raise ConfigurationError(f"acceleration factor must be >= 1, got {n}")
    if n == 1:
        return fast

    def scaled():
        inv = 1.0 / n
        for duration, bseg, point, point_fn in fast:
            if point_fn is None:
                yield (duration * inv, bseg, point, None)
            else:
                yield (duration * inv, bseg, None, lambda s, f=point_fn: f(s * n))

    return scaled()


def _draw_open_uniform(rng) -> float:
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    return u


def _grid_cross(offsets, bs, A, theta):
    """First crossing of theta by the trapezoid accumulator started at A.

    Returns (offset, A_at_offset) or None; the crossing offset is located by
    linear interpolation of the accumulator between grid nodes.
    """
    incr = 0.5 * (bs[1:] + bs[:-1]) * np.diff(offsets)
    cum = A + np.concatenate(([0.0], np.cumsum(incr)))
    k = int(np.searchsorted(cum, theta))
    if k >= len(cum):
        return None, float(cum[-1])
    if k == 0:
        return float(offsets[0]), float(cum[0])
    lo, hi = cum[k - 1], cum[k]
    frac = 0.0 if hi <= lo else (theta - lo) / (hi - lo)
    s = offsets[k - 1] + frac * (offsets[k] - offsets[k - 1])
    return float(s), theta


def _first_crossing(segments, n, rate, clock, index, remaining, config, u_rng):
    """Advance the fast path until the rate integral reaches a fresh threshold.

    Returns (zeta, point, theta, accumulated): zeta is the slow-time crossing
    offset, or +inf if the integral stays below theta up to ``remaining``, in
    which case ``point`` is the fast-path position at the horizon.
    """
    theta = clock.inverse(_draw_open_uniform(u_rng))
    if theta < 0:
        raise ConfigurationError(f"clock {clock.name} produced negative threshold")
    inv_n = 1.0 / n
    fn = rate.fn
    A = 0.0
    t = 0.0
    for duration, bseg, point, point_fn in segments:
        d = duration * inv_n
        if bseg is None:
            # rate varies along the segment: trapezoid quadrature on the dt grid
            span = min(d, remaining - t)
            m = max(1, int(math.ceil(span / config.dt)))
            offsets = np.linspace(0.0, span, m + 1)
            if point_fn is None:
                bs = np.full(m + 1, fn(index, point), dtype=float)
            else:
                bs = np.array([fn(index, point_fn(o * n)) for o in offsets], dtype=float)
            if np.any(bs < 0):
                raise ConfigurationError(f"negative rate on grid at index {index!r}")
            s, A_new = _grid_cross(offsets, bs, A, theta)
            if s is not None:
                pre = point_fn(s * n) if point_fn is not None else point
                return t + s, pre, theta, theta
            if t + span >= remaining:
                pre = point_fn(span * n) if point_fn is not None else point
                return math.inf, pre, theta, A_new
            A = A_new
            t += d
            continue
        if bseg > 0.0:
            s = (theta - A) / bseg
            if s <= d and t + s <= remaining:
                pre = point_fn(s * n) if point_fn is not None else point
                return t + s, pre, theta, theta
        elif bseg < 0.0:
            raise ConfigurationError(f"negative rate {bseg} at index {index!r}")
        end = t + d
        if end >= remaining:
            off = remaining - t
            pre = point_fn(off * n) if point_fn is not None else point
            return math.inf, pre, theta, A + (bseg * off if bseg else 0.0)
        A += bseg * d
        t = end
    raise RuntimeError("fast-path segment stream ended before the horizon")


def sample_jump_time(fast, rate, clock, start: IndexedState, config: EngineConfig, rng):
    """Draw one inter-jump time from a prepared fast-path segment stream.

    ``fast`` is a segment stream (already accelerated if desired).  Returns
    (zeta, pre_jump_state); zeta is +inf when the rate integral stays below
    the threshold up to config.horizon, and the state is then the fast-path
    position at the horizon.
    """
    if start is ABSORBED:
        raise ConfigurationError("cannot sample a jump from the absorbed state")
    zeta, point, _theta, _acc = _first_crossing(
        fast, 1, rate, clock, start.index, config.horizon, config, rng
    )
    return zeta, IndexedState(start.index, point)


def simulate_path(
    spec: SemiMarkovSpec, n: int, start: IndexedState, config: EngineConfig, seed
) -> PathRecord:
    """Simulate one trajectory of the accelerated process by piecing out.

    The replica seed splits into three disjoint substreams: clock thresholds,
    fast-path noise, and kernel transitions.  Replay with the same seed is
    bit-exact.
    """
    if start is ABSORBED:
        raise ConfigurationError("cannot start a path in the absorbed state")
    if n < 1:
        raise ConfigurationError(f"acceleration factor must be >= 1, got {n}")
    ss = as_seed_sequence(seed)
    u_rng, fast_rng, kernel_rng = (np.random.default_rng(c) for c in ss.spawn(3))

    rec = PathRecord(n=n, seed=ss.entropy, start_index=start.index)
    rec.thresholds = []
    rec.accumulated = []
    if config.record_points:
        rec.pre_jump_points = []
        rec.post_jump_points = []

    state = start
    t = 0.0
    while True:
        if t >= config.horizon:
            rec.termination = HORIZON
            rec.final_time = config.horizon
            rec.final_index, rec.final_point = state.index, state.point
            return rec
        if rec.jumps >= config.max_jumps:
            rec.termination = MAX_JUMPS
            rec.final_time = t
            rec.final_index, rec.final_point = state.index, state.point
            return rec
        segments = spec.dynamics.segments(state, fast_rng)
        zeta, point, theta, acc = _first_crossing(
            segments, n, spec.rate, spec.clock, state.index, config.horizon - t, config, u_rng
        )
        if zeta == math.inf:
            rec.termination = HORIZON
            rec.final_time = config.horizon
            rec.final_index, rec.final_point = state.index, point
            return rec
        t += zeta
        pre = IndexedState(state.index, point)
        post = spec.kernel.sample(pre, kernel_rng)
        rec.jump_times.append(t)
        rec.pre_jump_indices.append(pre.index)
        rec.thresholds.append(theta)
        rec.accumulated.append(acc)
        if config.record_points:
            rec.pre_jump_points.append(pre.point)
        if post is ABSORBED:
            rec.post_jump_indices.append(CEMETERY_INDEX)
            if config.record_points:
                rec.post_jump_points.append(ABSORBED)
            rec.termination = ABSORBED_TERM
            rec.final_time = t
            rec.final_index, rec.final_point = CEMETERY_INDEX, ABSORBED
            return rec
        rec.post_jump_indices.append(post.index)
        if config.record_points:
            rec.post_jump_points.append(post.point)
        state = post


def _grid_count(t1: float, h: float, k_next: int):
    """Count of grid nodes from k_next with node times below t1."""
    k_end = math.ceil(t1 / h - 1e-12)
    return max(0, k_end - k_next)


def brute_force_path(
    spec: SemiMarkovSpec,
    n: int,
    start: IndexedState,
    dt: float,
    horizon: float,
    seed,
    max_jumps: int = 10**6,
) -> PathRecord:
    """Fixed-step oracle: first-order discretization of the jump-time law.

    Marches the slow clock in steps of dt, accumulating A += b(X_t)*dt with b
    re-evaluated pointwise, and jumps at the first grid point where
    G(A) >= U.  Callers keep dt small enough that expected jumps per step are
    well below one (heuristic: dt * max b <= 0.01).  Same record shape and
    seed discipline as simulate_path, so runs with equal seeds share the fast
    path and threshold draws.
    """
    if start is ABSORBED:
        raise ConfigurationError("cannot start a path in the absorbed state")
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    ss = as_seed_sequence(seed)
    u_rng, fast_rng, kernel_rng = (np.random.default_rng(c) for c in ss.spawn(3))
    cdf = spec.clock.cdf
    fn = spec.rate.fn

    rec = PathRecord(n=n, seed=ss.entropy, start_index=start.index)
    rec.pre_jump_points = []
    rec.post_jump_points = []

    state = start
    t_epoch_start = 0.0
    while True:
        remaining = horizon - t_epoch_start
        if remaining <= 0:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index, rec.final_point = state.index, state.point
            return rec
        if rec.jumps >= max_jumps:
            rec.termination = MAX_JUMPS
            rec.final_time = t_epoch_start
            rec.final_index, rec.final_point = state.index, state.point
            return rec
        u = _draw_open_uniform(u_rng)
        index = state.index
        seg_const = spec.rate.is_segment_constant(index)
        inv_n = 1.0 / n

        A = 0.0
        k = 0  # next grid node (node times k*dt from epoch start)
        t0 = 0.0  # segment start, slow time from epoch start
        jumped_at = None
        pre_point = state.point
        for duration, _bseg, point, point_fn in spec.dynamics.segments(state, fast_rng):
            d = duration * inv_n
            t1 = min(t0 + d, remaining)
            k0 = k
            m = _grid_count(t1, dt, k)
            if m > 0:
                # nodes k0..k0+m-1; the accumulator at node k0+j holds the sum
                # over all nodes before it, and the jump fires at the first
                # node whose accumulated value satisfies G(A) >= u
                if seg_const:
                    b = fn(index, point_fn((k0 * dt - t0) * n) if point_fn else point)
                    if b < 0:
                        raise ConfigurationError(f"negative rate {b} at index {index!r}")
                    if b > 0 and cdf(A + (m - 1) * b * dt) >= u:
                        lo, hi = 0, m - 1
                        while lo < hi:
                            mid = (lo + hi) // 2
                            if cdf(A + mid * b * dt) >= u:
                                hi = mid
                            else:
                                lo = mid + 1
                        jumped_at = (k0 + lo) * dt
                        A += lo * b * dt
                    else:
                        A += m * b * dt
                else:
                    offs = (k0 + np.arange(m)) * dt - t0
                    if point_fn is None:
                        bs = np.full(m, fn(index, point), dtype=float)
                    else:
                        bs = np.array([fn(index, point_fn(o * n)) for o in offs], dtype=float)
                    node_acc = A + dt * np.concatenate(([0.0], np.cumsum(bs[:-1])))
                    if cdf(float(node_acc[-1])) >= u:
                        lo, hi = 0, m - 1
                        while lo < hi:
                            mid = (lo + hi) // 2
                            if cdf(float(node_acc[mid])) >= u:
                                hi = mid
                            else:
                                lo = mid + 1
                        jumped_at = (k0 + lo) * dt
                        A = float(node_acc[lo])
                    else:
                        A += dt * float(np.sum(bs))
                k = k0 + m
            if jumped_at is not None:
                off = jumped_at - t0
                pre_point = point_fn(off * n) if point_fn is not None else point
                break
            if t0 + d >= remaining:
                off = remaining - t0
                pre_point = point_fn(off * n) if point_fn is not None else point
                break
            t0 += d

        if jumped_at is None:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index, rec.final_point = index, pre_point
            return rec

        t_jump = t_epoch_start + jumped_at
        pre = IndexedState(index, pre_point)
        post = spec.kernel.sample(pre, kernel_rng)
        rec.jump_times.append(t_jump)
        rec.pre_jump_indices.append(index)
        rec.pre_jump_points.append(pre_point)
        if post is ABSORBED:
            rec.post_jump_indices.append(CEMETERY_INDEX)
            rec.post_jump_points.append(ABSORBED)
            rec.termination = ABSORBED_TERM
            rec.final_time = t_jump
            rec.final_index, rec.final_point = CEMETERY_INDEX, ABSORBED
            return rec
        rec.post_jump_indices.append(post.index)
        rec.post_jump_points.append(post.point)
        state = post
        t_epoch_start = t_jump


def format_index(index) -> str:
    """Stable text form of an index for delimited output."""
    if index is CEMETERY_INDEX:
        return "cemetery"
    if isinstance(index, tuple):
        return "(" + ",".join(str(x) for x in index) + ")"
    return str(index)


def path_csv_rows(record: PathRecord, replica_id: int):
    """Flat rows (replica_id, k, tau_k, pre_index, post_index) for one path."""
    return [
        (
            replica_id,
            k + 1,
            record.jump_times[k],
            format_index(record.pre_jump_indices[k]),
            format_index(record.post_jump_indices[k]),
        )
        for k in range(record.jumps)
    ]


CSV_HEADER = ("replica_id", "k", "tau_k", "pre_index", "post_index")


def write_paths_csv(rows, fh, provenance: str | None = None):
    """Write jump rows sorted by (replica_id, k); byte-stable across workers.

    ``provenance`` (config hash + seed) goes into a leading comment line.
    """
    if provenance:
        fh.write(f"# {provenance}\n")
    writer = csv.writer(fh)
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=lambda r: (r[0], r[1])):
        writer.writerow((row[0], row[1], f"{row[2]:.12g}", row[3], row[4]))


def path_summary(record: PathRecord) -> dict:
    """Order-insensitive per-path summary for commutative merging."""
    return {
        "replicas": 1,
        "terminations": Counter({record.termination: 1}),
        "jump_counts": Counter({record.jumps: 1}),
        "final_indices": Counter({format_index(record.final_index): 1}),
    }


def merge_summaries(a: dict, b: dict) -> dict:
    return {
        "replicas": a["replicas"] + b["replicas"],
        "terminations": a["terminations"] + b["terminations"],
        "jump_counts": a["jump_counts"] + b["jump_counts"],
        "final_indices": a["final_indices"] + b["final_indices"],
    }


def empty_summary() -> dict:
    return {
        "replicas": 0,
        "terminations": Counter(),
        "jump_counts": Counter(),
        "final_indices": Counter(),
    }


def summary_to_json(summary: dict) -> dict:
    return {
        "replicas": summary["replicas"],
        "terminations": dict(sorted(summary["terminations"].items())),
        "jump_count_histogram": {str(k): v for k, v in sorted(summary["jump_counts"].items())},
        "final_index_counts": dict(sorted(summary["final_indices"].items())),
    }
