"""Minimal solvable model: a two-point fast chain per index, everything closed form.

The fast dynamics on every component is the same chain on {a, b}; jumps move
the index according to a stochastic matrix and restart the fast chain at a
fixed fresh point.  Used throughout the test battery because the stationary
law, the mean rate, and the biased pre-jump law are all one-liners.
"""

from __future__ import annotations

import numpy as np

from ..core import (
    ConfigurationError,
    IndexedState,
    JumpClock,
    RateFunction,
    SemiMarkovSpec,
    StationarySummary,
    TransitionKernel,
    exponential_clock,
)
from ..limits import LimitSpec
from .dynamics import FiniteCTMC, SingleChainDynamics

POINTS = ("a", "b")


def stationary_two_state(q_ab: float, q_ba: float):
    """Stationary law of the a<->b chain: detailed balance q_ab*mu_a = q_ba*mu_b."""
    total = q_ab + q_ba
    return q_ba / total, q_ab / total


def build_two_state_toy(
    q_ab: float,
    q_ba: float,
    b_a: float,
    b_b: float,
    index_matrix,
    fresh_point: str = "a",
    clock: JumpClock | None = None,
):
    """Build the toy's prelimit spec and its analytic limit.

    index_matrix is a stochastic matrix over a finite index set {0..k-1}; the
    post-jump state is (sampled index, fresh_point).
    """
    if q_ab <= 0 or q_ba <= 0:
        raise ConfigurationError("fast-chain rates must be positive")
    if b_a < 0 or b_b < 0:
        raise ConfigurationError("rate values must be nonnegative")
    if fresh_point not in POINTS:
        raise ConfigurationError(f"fresh_point must be one of {POINTS}")
    M = np.array(index_matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigurationError("index matrix must be square")
    if np.any(M < 0) or np.any(np.abs(M.sum(axis=1) - 1.0) > 1e-9):
        raise ConfigurationError("index matrix rows must be probabilities summing to 1")
    clock = clock or exponential_clock()
    k = M.shape[0]

    chain = FiniteCTMC([[0.0, q_ab], [q_ba, 0.0]], labels=POINTS)
    b_of = {"a": b_a, "b": b_b}
    rate = RateFunction(fn=lambda i, p: b_of[p], segment_constant=True)
    dynamics = SingleChainDynamics(chain, rate.fn)

    cum_rows = np.cumsum(M, axis=1)

    def kernel_sample(state, rng):
        j = int(np.searchsorted(cum_rows[state.index], rng.random()))
        return IndexedState(min(j, k - 1), fresh_point)

    kernel = TransitionKernel(sample=kernel_sample, mass=1)

    mu_a, mu_b = stationary_two_state(q_ab, q_ba)
    mean_rate = mu_a * b_a + mu_b * b_b
    if mean_rate > 0:
        p_a = mu_a * b_a / mean_rate

        def biased(rng, p_a=p_a):
            return "a" if rng.random() < p_a else "b"

    else:
        biased = None

    summaries = {
        i: StationarySummary(index=i, mean_rate=mean_rate, biased_sampler=biased)
        for i in range(k)
    }

    spec = SemiMarkovSpec(
        name="two-state-toy",
        dynamics=dynamics,
        clock=clock,
        rate=rate,
        kernel=kernel,
        probe_states=tuple(IndexedState(i, p) for i in range(k) for p in POINTS),
        membership=lambda i, p: p in POINTS,
    )
    limit = LimitSpec(
        name="two-state-toy",
        clock=clock,
        summary_for=summaries.__getitem__,
        kernel=kernel,
        analytic_rows=lambda i: {j: float(M[i, j]) for j in range(k) if M[i, j] > 0},
        explosive=False,
    )
    return spec, limit
