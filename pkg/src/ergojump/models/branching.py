"""Population of individuals carrying fast traits; events replace one individual.

The point at population size i is an ordered i-tuple of trait-chain states;
every individual's trait evolves as an independent copy of one finite chain.
The total jump rate is the sum of per-individual event rates beta(trait); a
jump selects an individual proportionally to beta and replaces it by its
progeny tuple (empty progeny = death).  The index process counts individuals;
its limit, as traits are accelerated, is a continuous-time branching process
whose event rate is the stationary average of beta and whose offspring-count
law is the beta-weighted stationary average of the per-trait count law.
"""

from __future__ import annotations

import numpy as np

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
from .dynamics import FiniteCTMC, WeightedComponentsCTMC


def build_typed_branching(trait_chain: FiniteCTMC, beta, reproduce, offspring_counts):
    """Assemble a branching model from its trait-level ingredients.

    beta              -- per-trait-state event rate, length m, nonnegative.
    reproduce         -- callable (trait_id, rng) -> tuple of offspring trait ids.
    offspring_counts  -- (m, J+1) matrix; row s is the pmf of len(reproduce(s, .)).
                         Used only to write down the limit's offspring law.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.shape[0] != trait_chain.m:
        raise ConfigurationError("beta must assign one rate per trait state")
    if np.any(beta < 0) or not np.any(beta > 0):
        raise ConfigurationError("beta must be nonnegative and not identically zero")
    counts = np.asarray(offspring_counts, dtype=float)
    if counts.ndim != 2 or counts.shape[0] != trait_chain.m or np.any(counts < 0):
        raise ConfigurationError("offspring_counts must be a per-state pmf matrix")
    if np.any(np.abs(counts.sum(axis=1) - 1.0) > 1e-9):
        raise ConfigurationError("offspring_counts rows must sum to 1")

    clock = exponential_clock()
    beta_list = [float(x) for x in beta]

    def rate_fn(i, pt):
        total = 0.0
        for s in pt:
            total += beta_list[s]
        return total

    rate = RateFunction(fn=rate_fn, segment_constant=True)
    dynamics = WeightedComponentsCTMC(trait_chain, weight_rows=lambda i: beta)

    def kernel_sample(state, rng):
        pt = state.point
        r = rng.random() * rate_fn(state.index, pt)
        acc = 0.0
        k = 0
        for k, s in enumerate(pt):
            acc += beta_list[s]
            if r < acc:
                break
        progeny = reproduce(pt[k], rng)
        new_pt = pt[:k] + tuple(progeny) + pt[k + 1 :]
        return IndexedState(len(new_pt), new_pt)

    kernel = TransitionKernel(sample=kernel_sample, mass=lambda i: 1 if i >= 1 else 0)

    chi = trait_chain.stationary_distribution()
    chi_cum = np.cumsum(chi)
    rate_bar = float(chi @ beta)
    if rate_bar <= 0:
        raise ConfigurationError("stationary mean of beta vanishes; no limit dynamics")
    biased_cum = np.cumsum(chi * beta) / rate_bar

    _cache = {}

    def summary_for(i):
        summary = _cache.get(i)
        if summary is not None:
            return summary
        if i == 0:
            summary = StationarySummary(index=0, mean_rate=0.0)
        else:

            def biased(rng, i=i):
                pts = np.searchsorted(chi_cum, rng.random(i))
                slot = int(rng.random() * i)
                pts[slot] = np.searchsorted(biased_cum, rng.random())
                return tuple(pts.tolist())

            summary = StationarySummary(index=i, mean_rate=i * rate_bar, biased_sampler=biased)
        _cache[i] = summary
        return summary

    # limit offspring law: beta-weighted stationary average of the count pmfs
    offspring_law = (chi * beta) @ counts / rate_bar

    def analytic_rows(i):
        if i < 1:
            raise ConfigurationError("limit jump chain undefined at population 0")
        return {i - 1 + j: float(p) for j, p in enumerate(offspring_law) if p > 0}

    spec = SemiMarkovSpec(
        name="typed-branching",
        dynamics=dynamics,
        clock=clock,
        rate=rate,
        kernel=kernel,
        probe_states=(
            IndexedState(1, (0,)),
            IndexedState(2, (0, trait_chain.m - 1)),
        ),
        membership=lambda i, pt: len(pt) == i and all(0 <= s < trait_chain.m for s in pt),
    )
    limit = LimitSpec(
        name="typed-branching",
        clock=clock,
        summary_for=summary_for,
        kernel=kernel,
        analytic_rows=analytic_rows,
        explosive=False,  # bounded offspring, linear total rate
    )
    return spec, limit


def binary_branching(trait_chain: FiniteCTMC, division, death, offspring_trait="inherit"):
    """Division-or-death specialization: progeny is two individuals or none.

    offspring_trait: "inherit" passes the parent's trait to both offspring,
    "stationary" draws each offspring trait fresh from the trait chain's
    stationary law.
    """
    division = np.asarray(division, dtype=float)
    death = np.asarray(death, dtype=float)
    if division.shape != (trait_chain.m,) or death.shape != (trait_chain.m,):
        raise ConfigurationError("division and death need one rate per trait state")
    if np.any(division < 0) or np.any(death < 0):
        raise ConfigurationError("division and death rates must be nonnegative")
    beta = division + death

    if offspring_trait == "inherit":
        def child_pair(s, rng):
            return (s, s)
    elif offspring_trait == "stationary":
        draw = trait_chain.stationary_sampler()

        def child_pair(s, rng):
            return (draw(rng), draw(rng))
    else:
        raise ConfigurationError("offspring_trait must be 'inherit' or 'stationary'")

    def reproduce(s, rng):
        if rng.random() * beta[s] < division[s]:
            return child_pair(s, rng)
        return ()

    counts = np.zeros((trait_chain.m, 3))
    for s in range(trait_chain.m):
        if beta[s] > 0:
            counts[s, 0] = death[s] / beta[s]
            counts[s, 2] = division[s] / beta[s]
        else:
            counts[s, 0] = 1.0  # never selected; pmf row kept valid
    return build_typed_branching(trait_chain, beta, reproduce, counts)


def stationary_root_sampler(trait_chain: FiniteCTMC):
    """Single founding individual with a stationary-distributed trait."""
    draw = trait_chain.stationary_sampler()

    def start(rng):
        return IndexedState(1, (draw(rng),))

    return start
