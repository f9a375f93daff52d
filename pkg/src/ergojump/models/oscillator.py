"""Deterministic oscillator: fixed-time positions never settle, indices do.

Two intervals, E1 = [-1,1] and E2 = [2,4]; the fast motion from start x0 is
cos(x0 + t) on E1 and 3 + cos(x0 + t) on E2, the jump rate is identically 1,
and jumps land at the fixed points 3 (from E1) and 0 (from E2).  Under
acceleration the position at a fixed time oscillates without converging while
the jump-time and index laws are exact Exp(1) dynamics at every acceleration,
which is the dichotomy this model exists to exhibit.
"""

from __future__ import annotations

import math

from ..core import (
    IndexedState,
    RateFunction,
    SemiMarkovSpec,
    StationarySummary,
    TransitionKernel,
    exponential_clock,
)
from ..limits import LimitSpec
from .dynamics import DeterministicFlowDynamics

_EPS = 1e-9


def _flow(index, x0, t):
    return math.cos(x0 + t) if index == 1 else 3.0 + math.cos(x0 + t)


def _kernel_sample(state, rng):
    return IndexedState(2, 3.0) if state.index == 1 else IndexedState(1, 0.0)


def build_oscillator_counterexample() -> SemiMarkovSpec:
    """Prelimit spec only: positions have no limit process, just the index law."""
    return SemiMarkovSpec(
        name="oscillator",
        dynamics=DeterministicFlowDynamics(_flow, rate_value=lambda i: 1.0),
        clock=exponential_clock(),
        rate=RateFunction(fn=lambda i, p: 1.0, segment_constant=True),
        kernel=TransitionKernel(sample=_kernel_sample, mass=1),
        probe_states=(IndexedState(1, 0.0), IndexedState(2, 3.0)),
        membership=lambda i, p: (
            -1.0 - _EPS <= p <= 1.0 + _EPS if i == 1 else 2.0 - _EPS <= p <= 4.0 + _EPS
        ),
    )


def oscillator_index_limit() -> LimitSpec:
    """Index-level limit: the alternating 1 <-> 2 chain with unit Exp holds.

    The time-average law of cos(x0 + t) is the pushforward of a uniform angle,
    and the rate is constant, so the biased pre-jump law equals that
    time-average law.
    """
    clock = exponential_clock()

    def summary_for(i):
        def biased(rng, i=i):
            angle = rng.random() * 2.0 * math.pi
            return math.cos(angle) if i == 1 else 3.0 + math.cos(angle)

        return StationarySummary(index=i, mean_rate=1.0, biased_sampler=biased)

    return LimitSpec(
        name="oscillator",
        clock=clock,
        summary_for=summary_for,
        kernel=TransitionKernel(sample=_kernel_sample, mass=1),
        analytic_rows=lambda i: {2: 1.0} if i == 1 else {1: 1.0},
        explosive=False,
    )
