"""Ladder model separating prelimit and limit explosion behavior.

Each rung i has two points: the fast chain moves from the idle point 0 to the
armed point 1 at rate 1 and never back, the jump rate is 0 when idle and
i**rate_exponent when armed, and every jump climbs to (i+1, 0).  The limit
index process climbs at rate i**rate_exponent, which is explosive for
exponent 2 (summable inverse rates) and non-explosive for exponent 1; the
prelimit process is never explosive because each rung costs an Exp(n) idle
residence.  Index 0 is a sink (zero rate everywhere on the rung).
"""

from __future__ import annotations

from ..core import (
    ConfigurationError,
    IndexedState,
    RateFunction,
    SemiMarkovSpec,
    StationarySummary,
    TransitionKernel,
    exponential_clock,
)
from ..limits import LimitSpec
from .dynamics import FiniteCTMC, SingleChainDynamics

IDLE, ARMED = 0, 1


def build_explosion_ladder(rate_exponent: int = 2):
    """Build the ladder's prelimit spec and its (analytically flagged) limit."""
    if rate_exponent < 1:
        raise ConfigurationError("rate_exponent must be >= 1")
    clock = exponential_clock()
    chain = FiniteCTMC([[0.0, 1.0], [0.0, 0.0]])

    def rate_fn(i, p):
        return float(i**rate_exponent) if p == ARMED else 0.0

    rate = RateFunction(fn=rate_fn, segment_constant=True)
    dynamics = SingleChainDynamics(chain, rate_fn)
    kernel = TransitionKernel(
        sample=lambda state, rng: IndexedState(state.index + 1, IDLE), mass=1
    )

    _cache = {}

    def summary_for(i):
        summary = _cache.get(i)
        if summary is None:
            mean = float(i**rate_exponent)
            summary = _cache[i] = StationarySummary(
                index=i,
                mean_rate=mean,
                biased_sampler=(lambda rng: ARMED) if mean > 0 else None,
            )
        return summary

    spec = SemiMarkovSpec(
        name="explosion-ladder",
        dynamics=dynamics,
        clock=clock,
        rate=rate,
        kernel=kernel,
        probe_states=(IndexedState(1, IDLE), IndexedState(3, ARMED)),
        membership=lambda i, p: p in (IDLE, ARMED),
    )
    limit = LimitSpec(
        name="explosion-ladder",
        clock=clock,
        summary_for=summary_for,
        kernel=kernel,
        analytic_rows=lambda i: {i + 1: 1.0},
        # sum of inverse climb rates sum i^-e converges iff e > 1
        explosive=(rate_exponent > 1),
    )
    return spec, limit
