"""Core vocabulary: indexed states, jump clocks, rate functions, transition kernels.

A model lives on a disjoint union of component spaces, one per index value.
The position of the full process is an (index, point) pair; the index is an
opaque hashable token and the point encoding is model-defined (a small enum
value, a float, or a tuple of component states).

Fast-path generators produce a trajectory lazily as a stream of segments.
A segment is a plain tuple

    (duration, rate_value, point, point_fn)

where ``duration`` is the segment length in the generator's own time units
(``math.inf`` allowed for absorbing holds), ``rate_value`` is the value of the
jump rate b along the segment (a float when b is constant on the segment,
``None`` when b varies and must be integrated on a grid), and the position at
offset ``s`` inside the segment is ``point`` when ``point_fn`` is None, else
``point_fn(s)``.  ``point_fn`` may ignore ``s`` and act as a lazy snapshot for
dynamics that keep mutable internal state; it is only called while the
generator is parked at that segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import numpy as np

Index = Any
Point = Any
Segment = tuple  # (duration, rate_value, point, point_fn)


class _AbsorbedType:
    """The dead state: the process enters it when the kernel has mass zero."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<absorbed>"


class _CemeteryIndexType:
    """Index reported for the absorbed state; distinct from every model index."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<cemetery>"


ABSORBED = _AbsorbedType()
CEMETERY_INDEX = _CemeteryIndexType()


@dataclass(frozen=True)
class IndexedState:
    """Position of the full process: index i plus a point in the i-th space."""

    index: Index
    point: Point

    def __repr__(self):
        return f"IndexedState({self.index!r}, {self.point!r})"


def project_index(state) -> Index:
    """Index of a state; total: the absorbed state maps to the cemetery index."""
    if state is ABSORBED:
        return CEMETERY_INDEX
    return state.index


@dataclass(frozen=True)
class JumpClock:
    """Jump-time law: an absolutely continuous CDF G with generalized inverse.

    The jump fires when the accumulated rate integral first reaches the
    threshold G^{-1}(U) for an independent uniform U.  Only the inverse is
    needed by the event-driven engine; ``cdf`` is kept for the brute-force
    oracle and for validation.  ``inverse(u)`` returns +inf for u at or above
    sup G (defective clocks).
    """

    name: str
    cdf: Callable[[float], float]
    inverse: Callable[[float], float]


def exponential_clock() -> JumpClock:
    """The memoryless clock; recovers a process with exponential jump rate b."""
    return JumpClock(
        name="exponential",
        cdf=lambda x: -math.expm1(-x),
        inverse=lambda u: -math.log1p(-u),
    )


def uniform_clock(scale: float = 1.0) -> JumpClock:
    """Clock uniform on [0, scale]: G(x) = min(x/scale, 1)."""
    if scale <= 0:
        raise ConfigurationError("uniform clock scale must be positive")
    return JumpClock(
        name=f"uniform[0,{scale:g}]",
        cdf=lambda x: min(x / scale, 1.0) if x > 0 else 0.0,
        inverse=lambda u: u * scale,
    )


CLOCKS = {"exponential": exponential_clock, "uniform": uniform_clock}


class ConfigurationError(ValueError):
    """Raised for malformed model or experiment configuration."""


def clock_threshold(clock: JumpClock, u: float) -> float:
    """Threshold G^{-1}(u) that the accumulated rate integral must reach.

    u must lie in the open interval (0, 1).
    """
    if not 0.0 < u < 1.0:
        raise ConfigurationError(f"uniform draw must be in (0,1), got {u}")
    theta = clock.inverse(u)
    if theta < 0:
        raise ConfigurationError(f"clock {clock.name} produced negative threshold")
    return theta


@dataclass(frozen=True)
class RateFunction:
    """Pointwise jump rate b >= 0 on the full state space; b(absorbed) = 0.

    ``segment_constant`` declares, per index, whether b is constant along the
    fast path between its transitions; this selects exact crossing arithmetic
    over grid quadrature downstream.  It is a bool (all indices alike) or a
    callable index -> bool.
    """

    fn: Callable[[Index, Point], float]
    segment_constant: Any = True

    def value(self, state) -> float:
        if state is ABSORBED:
            return 0.0
        return self.fn(state.index, state.point)

    def is_segment_constant(self, index) -> bool:
        sc = self.segment_constant
        return sc(index) if callable(sc) else bool(sc)


@dataclass(frozen=True)
class TransitionKernel:
    """Post-jump law: a sampler plus the declared total mass per index.

    Mass 1 means the sampler returns a real state; mass 0 means the index is
    absorbing and the sampler returns ABSORBED.
    """

    sample: Callable[[IndexedState, np.random.Generator], Any]
    mass: Any = 1  # int, or callable index -> int

    def mass_at(self, index) -> int:
        m = self.mass
        return m(index) if callable(m) else int(m)


@dataclass(frozen=True)
class StationarySummary:
    """Stationary mean jump rate of one component space, with its biased sampler.

    ``mean_rate`` is the fast-stationary average of b on the component.  The
    biased sampler draws from the stationary law reweighted by b (the law of
    the position just before a jump, in the accelerated limit); it is absent
    when the mean rate vanishes.  ``provenance`` is "analytic" or
    "ergodic-estimate"; estimated summaries carry their diagnostics.
    """

    index: Index
    mean_rate: float
    biased_sampler: Callable[[np.random.Generator], Point] | None = None
    provenance: str = "analytic"
    estimate: Any = None

    def __post_init__(self):
        if not math.isfinite(self.mean_rate) or self.mean_rate < 0:
            raise ConfigurationError(
                f"mean rate must be finite and nonnegative, got {self.mean_rate}"
            )
        if self.mean_rate == 0 and self.biased_sampler is not None:
            raise ConfigurationError("zero-rate summary cannot carry a biased sampler")


class FastDynamics:
    """Family of fast dynamics, one per index; base class for model plugins.

    Subclasses implement ``segments(state, rng)`` yielding the segment tuples
    described in the module docstring.  The stream must stay inside the
    component space of ``state.index``, have strictly positive durations, and
    be unbounded in cumulative time (an infinite final duration is fine).
    """

    def segments(self, state: IndexedState, rng: np.random.Generator) -> Iterator[Segment]:
        raise NotImplementedError


@dataclass(frozen=True)
class FastModel:
    """One component space's fast dynamics with the rate restricted to it."""

    index: Index
    dynamics: FastDynamics
    rate: RateFunction
    start_point: Point
    analytic_summary: StationarySummary | None = None


@dataclass(frozen=True)
class SemiMarkovSpec:
    """The full model: fast dynamics family, jump clock, rate, transition kernel.

    ``probe_states`` are representative states used by validation spot checks;
    ``membership(index, point)`` optionally tests whether a point belongs to
    the component space of ``index`` (used to detect index leaks).
    """

    name: str
    dynamics: FastDynamics
    clock: JumpClock
    rate: RateFunction
    kernel: TransitionKernel
    probe_states: tuple = ()
    membership: Callable[[Index, Point], bool] | None = None

    def fast_model(self, index, start_point, analytic_summary=None) -> FastModel:
        return FastModel(index, self.dynamics, self.rate, start_point, analytic_summary)


@dataclass
class ValidationReport:
    """Outcome of validate_spec: a list of (code, message) violations."""

    violations: list = field(default_factory=list)

    def add(self, code: str, message: str):
        self.violations.append((code, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "spec valid: no violations"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  [{c}] {m}" for c, m in self.violations]
        return "\n".join(lines)


def _check_clock(clock: JumpClock, report: ValidationReport, grid_size: int = 1000):
    xs = np.linspace(1e-9, 10.0, grid_size)
    cdf_vals = np.array([clock.cdf(float(x)) for x in xs])
    if np.any(np.diff(cdf_vals) < -1e-12):
        report.add("clock-monotone", f"clock {clock.name}: CDF not nondecreasing")
    if np.any(cdf_vals < -1e-12) or np.any(cdf_vals > 1 + 1e-12):
        report.add("clock-range", f"clock {clock.name}: CDF leaves [0,1]")
    # generalized-inverse sandwich G^{-1}(G(x)) <= x <= G(G^{-1}(x)) on a grid
    for x in np.linspace(0.05, 3.0, 25):
        g = clock.cdf(float(x))
        if 0.0 < g < 1.0:
            if clock.inverse(g) > x + 1e-9:
                report.add("clock-inverse", f"clock {clock.name}: G^-1(G({x:g})) > {x:g}")
    for u in np.linspace(0.05, 0.95, 19):
        theta = clock.inverse(float(u))
        if math.isfinite(theta) and clock.cdf(theta) < u - 1e-9:
            report.add("clock-inverse", f"clock {clock.name}: G(G^-1({u:g})) < {u:g}")


def validate_spec(
    spec: SemiMarkovSpec,
    rng: np.random.Generator | None = None,
    probe_horizon: float = 5.0,
    kernel_draws: int = 32,
) -> ValidationReport:
    """Spot-check a model spec; an empty report means all probes passed.

    Checks clock monotonicity and the generalized-inverse sandwich, b >= 0 at
    the probe states, kernel mass declarations against sampled transitions,
    and (when a membership test is supplied) that probe runs of the fast
    dynamics stay inside their component space.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    report = ValidationReport()
    _check_clock(spec.clock, report)

    for state in spec.probe_states:
        b = spec.rate.fn(state.index, state.point)
        if not (b >= 0):
            report.add("negative-rate", f"b{(state.index, state.point)} = {b}")
        mass = spec.kernel.mass_at(state.index)
        if mass not in (0, 1):
            report.add("kernel-mass", f"declared mass at index {state.index} is {mass}")
            continue
        for _ in range(kernel_draws):
            out = spec.kernel.sample(state, rng)
            if mass == 1 and out is ABSORBED:
                report.add("kernel-mass", f"mass-1 kernel returned absorbed from {state}")
                break
            if mass == 0 and out is not ABSORBED:
                report.add("kernel-mass", f"mass-0 kernel returned {out} from {state}")
                break

    if spec.membership is not None:
        for state in spec.probe_states:
            t = 0.0
            for duration, _b, point, point_fn in spec.dynamics.segments(state, rng):
                span = min(duration, probe_horizon - t)
                for s in (0.0, span / 2, span):
                    p = point_fn(s) if point_fn is not None else point
                    if not spec.membership(state.index, p):
                        report.add(
                            "index-leak",
                            f"fast path from {state} left its component at offset {t + s:g}",
                        )
                        break
                t += duration
                if t >= probe_horizon:
                    break
    return report


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int, tuple, or SeedSequence into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, tuple):
        return np.random.SeedSequence(seed)
    return np.random.SeedSequence(int(seed))


def replica_seed(root_seed: int, replica_id: int) -> np.random.SeedSequence:
    """Counter-based per-replica seed, independent of worker layout."""
    return np.random.SeedSequence((int(root_seed), int(replica_id)))
