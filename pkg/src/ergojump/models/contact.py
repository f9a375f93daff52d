"""Epidemic on a finite graph where each infected vertex carries a fast load.

The index is the susceptible/infected configuration (a 0/1 tuple over the
vertices) and the point stores the loads of the infected vertices in vertex
order.  Infected vertices heal at a load-dependent rate and push infection to
each susceptible neighbor at a load-dependent rate; a newly infected vertex
receives a load drawn from the new-load kernel applied to the infecting
neighbor's load.  Accelerating the load dynamics yields the classical contact
process whose infection and healing rates are the stationary averages of the
per-load rates.
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
    as_seed_sequence,
    exponential_clock,
)
from ..engine import HORIZON, MAX_JUMPS, PathRecord
from ..limits import LimitSpec
from .dynamics import FiniteCTMC, WeightedComponentsCTMC


def _validate_graph(adjacency):
    adj = [tuple(int(j) for j in nbrs) for nbrs in adjacency]
    V = len(adj)
    for k, nbrs in enumerate(adj):
        for j in nbrs:
            if not 0 <= j < V or j == k:
                raise ConfigurationError(f"bad neighbor {j} of vertex {k}")
            if k not in adj[j]:
                raise ConfigurationError(f"adjacency not symmetric at edge ({k},{j})")
        if len(set(nbrs)) != len(nbrs):
            raise ConfigurationError(f"duplicate neighbor at vertex {k}")
    return adj


def path_graph(n: int):
    """Adjacency of the n-vertex path 0 - 1 - ... - (n-1)."""
    if n < 1:
        raise ConfigurationError("path graph needs at least one vertex")
    return [
        tuple(j for j in (k - 1, k + 1) if 0 <= j < n)
        for k in range(n)
    ]


def _loads_by_vertex(config, point):
    loads = {}
    pos = 0
    for k, occupied in enumerate(config):
        if occupied:
            loads[k] = point[pos]
            pos += 1
    return loads


def build_contact_process(
    adjacency, kappa01, kappa10, load_chain: FiniteCTMC, new_load="inherit"
):
    """Assemble the graph epidemic's prelimit spec and its contact-process limit.

    kappa01/kappa10 give the per-load-state infection and healing rates;
    new_load is "inherit" (copy the infector's load), "stationary" (fresh from
    the load chain's stationary law), or a callable (load_id, rng) -> load_id.
    """
    adj = _validate_graph(adjacency)
    V = len(adj)
    k01 = np.asarray(kappa01, dtype=float)
    k10 = np.asarray(kappa10, dtype=float)
    if k01.shape != (load_chain.m,) or k10.shape != (load_chain.m,):
        raise ConfigurationError("kappa01/kappa10 need one rate per load state")
    if np.any(k01 < 0) or np.any(k10 < 0):
        raise ConfigurationError("infection/healing rates must be nonnegative")

    if new_load == "inherit":
        new_load_sample = lambda s, rng: s
    elif new_load == "stationary":
        draw = load_chain.stationary_sampler()
        new_load_sample = lambda s, rng: draw(rng)
    elif callable(new_load):
        new_load_sample = new_load
    else:
        raise ConfigurationError("new_load must be 'inherit', 'stationary', or callable")

    clock = exponential_clock()

    def sus_degree(config, vertex):
        return sum(1 for j in adj[vertex] if not config[j])

    def rate_fn(config, point):
        # total event rate recomputed from scratch: healing of each infected
        # vertex plus, for each susceptible vertex, infection pressure from
        # its infected neighbors
        loads = _loads_by_vertex(config, point)
        total = 0.0
        for k in range(V):
            if config[k]:
                total += k10[loads[k]]
            else:
                for j in adj[k]:
                    if config[j]:
                        total += k01[loads[j]]
        return total

    rate = RateFunction(fn=rate_fn, segment_constant=True)

    def weight_rows(config):
        rows = []
        for k in range(V):
            if config[k]:
                rows.append(k10 + sus_degree(config, k) * k01)
        return np.asarray(rows)

    dynamics = WeightedComponentsCTMC(load_chain, weight_rows=weight_rows)

    def kernel_sample(state, rng):
        config = state.index
        loads = _loads_by_vertex(config, state.point)
        events = []  # (weight, kind, vertex, infector)
        for k in range(V):
            if config[k]:
                w = float(k10[loads[k]])
                if w > 0:
                    events.append((w, "heal", k, None))
            else:
                pressure = [(j, float(k01[loads[j]])) for j in adj[k] if config[j]]
                w = sum(p for _, p in pressure)
                if w > 0:
                    events.append((w, "infect", k, pressure))
        total = sum(w for w, *_ in events)
        r = rng.random() * total
        acc = 0.0
        for w, kind, k, pressure in events:
            acc += w
            if r < acc:
                break
        new_config = list(config)
        if kind == "heal":
            new_config[k] = 0
            del loads[k]
        else:
            r2 = rng.random() * w
            acc2 = 0.0
            for j, p in pressure:
                acc2 += p
                if r2 < acc2:
                    break
            new_config[k] = 1
            loads[k] = new_load_sample(loads[j], rng)
        new_config = tuple(new_config)
        new_point = tuple(loads[k] for k in range(V) if new_config[k])
        return IndexedState(new_config, new_point)

    kernel = TransitionKernel(sample=kernel_sample, mass=1)

    nu = load_chain.stationary_distribution()
    nu_cum = np.cumsum(nu)
    lam = float(nu @ k01)  # limit infection rate
    mu_heal = float(nu @ k10)  # limit healing rate

    _cache = {}

    def summary_for(config):
        summary = _cache.get(config)
        if summary is None:
            summary = _cache[config] = _make_summary(config)
        return summary

    def _make_summary(config):
        infected = [k for k in range(V) if config[k]]
        if not infected:
            return StationarySummary(index=config, mean_rate=0.0)
        w_rows = [k10 + sus_degree(config, k) * k01 for k in infected]
        nu_w = np.array([float(nu @ w) for w in w_rows])
        mean = float(nu_w.sum())
        pick_cum = np.cumsum(nu_w) / mean
        biased_cums = [np.cumsum(nu * w) / float(nu @ w) for w in w_rows]

        def biased(rng):
            pos = int(np.searchsorted(pick_cum, rng.random()))
            draws = rng.random(len(infected))
            loads = [int(np.searchsorted(nu_cum, u)) for u in draws]
            loads[pos] = int(np.searchsorted(biased_cums[pos], rng.random()))
            return tuple(loads)

        return StationarySummary(index=config, mean_rate=mean, biased_sampler=biased)

    def analytic_rows(config):
        mean = summary_for(config).mean_rate
        if mean <= 0:
            raise ConfigurationError("limit chain undefined at the empty configuration")
        row = {}
        for k in range(V):
            if config[k]:
                target = tuple(0 if j == k else c for j, c in enumerate(config))
                row[target] = mu_heal / mean
            else:
                pressure = sum(1 for j in adj[k] if config[j])
                if pressure:
                    target = tuple(1 if j == k else c for j, c in enumerate(config))
                    row[target] = lam * pressure / mean
        return row

    probe_config = tuple(1 if k == 0 else 0 for k in range(V))
    spec = SemiMarkovSpec(
        name="contact-process",
        dynamics=dynamics,
        clock=clock,
        rate=rate,
        kernel=kernel,
        probe_states=(IndexedState(probe_config, (0,)),),
        membership=lambda config, pt: len(pt) == sum(config)
        and all(0 <= s < load_chain.m for s in pt),
    )
    limit = LimitSpec(
        name="contact-process",
        clock=clock,
        summary_for=summary_for,
        kernel=kernel,
        analytic_rows=analytic_rows,
        explosive=False,
    )
    return spec, limit


def classical_contact_path(
    adjacency,
    infection_rate: float,
    healing_rate: float,
    initial_config,
    horizon: float,
    seed,
    max_jumps: int = 10**6,
) -> PathRecord:
    """Direct simulation of the classical contact process on a finite graph.

    Independent oracle for the limit of build_contact_process: plain
    event-by-event simulation with exponential holding times, no shared code
    with the limit sampler.  Records have the engine's shape with n = 0.
    """
    adj = _validate_graph(adjacency)
    V = len(adj)
    config = tuple(int(c) for c in initial_config)
    if len(config) != V:
        raise ConfigurationError("initial configuration length must match the graph")
    rng = np.random.default_rng(as_seed_sequence(seed))

    rec = PathRecord(n=0, seed=None, start_index=config)
    t = 0.0
    while True:
        if rec.jumps >= max_jumps:
            rec.termination = MAX_JUMPS
            rec.final_time = t
            rec.final_index = config
            return rec
        events = []
        for k in range(V):
            if config[k]:
                events.append((healing_rate, k, 0))
            else:
                pressure = sum(1 for j in adj[k] if config[j])
                if pressure:
                    events.append((infection_rate * pressure, k, 1))
        total = sum(w for w, _, _ in events)
        if total <= 0:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index = config
            return rec
        t_next = t + rng.exponential() / total
        if t_next > horizon:
            rec.termination = HORIZON
            rec.final_time = horizon
            rec.final_index = config
            return rec
        t = t_next
        r = rng.random() * total
        acc = 0.0
        for w, k, new_val in events:
            acc += w
            if r < acc:
                break
        new_config = tuple(new_val if j == k else c for j, c in enumerate(config))
        rec.jump_times.append(t)
        rec.pre_jump_indices.append(config)
        rec.post_jump_indices.append(new_config)
        config = new_config
