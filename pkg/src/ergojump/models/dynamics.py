"""Reference fast-dynamics plugins shared by the built-in models.

Two integration regimes are covered: finite-state chains (holding intervals
are exact, the rate is constant along each segment) and grid-discretized
scalar diffusion (the rate varies continuously and downstream quadrature is
engaged by yielding rate value None).
"""

from __future__ import annotations

import math

import numpy as np

from ..core import ConfigurationError, FastDynamics

TWO_PI = 2.0 * math.pi


class FiniteCTMC:
    """Finite-state continuous-time chain given by its off-diagonal rate matrix."""

    def __init__(self, rates, labels=None):
        R = np.array(rates, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ConfigurationError("rate matrix must be square")
        np.fill_diagonal(R, 0.0)
        if np.any(R < 0):
            raise ConfigurationError("off-diagonal rates must be nonnegative")
        self.m = R.shape[0]
        self.rates = R
        self.exit = R.sum(axis=1)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.m:
            raise ConfigurationError("labels length must match the number of states")
        # cumulative transition probabilities per state, as plain float lists
        # (hot loops index them directly)
        self._cum = []
        for s in range(self.m):
            if self.exit[s] > 0:
                self._cum.append(list(np.cumsum(R[s]) / self.exit[s]))
            else:
                self._cum.append(None)

    def sample_next(self, s: int, u: float) -> int:
        row = self._cum[s]
        j = 0
        while row[j] <= u:
            j += 1
        return j

    def stationary_distribution(self) -> np.ndarray:
        """Solve pi Q = 0, sum pi = 1 for the generator Q = rates - diag(exit)."""
        Q = self.rates - np.diag(self.exit)
        A = np.vstack([Q.T, np.ones(self.m)])
        rhs = np.zeros(self.m + 1)
        rhs[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        if np.any(pi < -1e-9):
            raise ConfigurationError("chain has no nonnegative stationary solution")
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    def stationary_sampler(self):
        pi = self.stationary_distribution()
        cum = np.cumsum(pi)

        def sample(rng):
            return int(np.searchsorted(cum, rng.random()))

        return sample


class SingleChainDynamics(FastDynamics):
    """The point is one finite-chain state; index only parameterizes the rate."""

    def __init__(self, chain: FiniteCTMC, rate_of):
        self.chain = chain
        self.rate_of = rate_of  # (index, point) -> rate value along the hold
        self._ids = (
            {lab: s for s, lab in enumerate(chain.labels)} if chain.labels else None
        )

    def _label(self, s):
        return self.chain.labels[s] if self.chain.labels else s

    def segments(self, state, rng):
        chain = self.chain
        index = state.index
        s = self._ids[state.point] if self._ids else state.point
        exit = chain.exit
        rate_of = self.rate_of
        while True:
            label = self._label(s)
            b = rate_of(index, label)
            q = exit[s]
            if q <= 0:
                yield (math.inf, b, label, None)
                return
            yield (rng.exponential() / q, b, label, None)
            s = chain.sample_next(s, rng.random())


class WeightedComponentsCTMC(FastDynamics):
    """Independent copies of one chain, one per component of a tuple point.

    The rate carried by segments is sum_k W[k, state_k], maintained
    incrementally across component flips; ``weight_rows(index)`` supplies W as
    a single row (shared by all components) or one row per component.  Points
    are tuples of chain-state ids; the empty tuple is an absorbing hold with
    rate zero.
    """

    BLOCK = 256

    def __init__(self, chain: FiniteCTMC, weight_rows):
        self.chain = chain
        self.weight_rows = weight_rows

    def segments(self, state, rng):
        ids = list(state.point)
        if not ids:
            yield (math.inf, 0.0, (), None)
            return
        chain = self.chain
        m = chain.m
        exit = [float(x) for x in chain.exit]
        cumrows = chain._cum
        W = np.asarray(self.weight_rows(state.index), dtype=float)
        if W.ndim == 1:
            wrows = [[float(x) for x in W]] * len(ids)
        else:
            wrows = [[float(x) for x in row] for row in W]
        counts = [0] * m
        members = [[] for _ in range(m)]
        for k, s in enumerate(ids):
            members[s].append(k)
            counts[s] += 1
        total_exit = sum(exit[s] * counts[s] for s in range(m))
        b = sum(wrows[k][s] for k, s in enumerate(ids))

        snap = lambda _s: tuple(ids)  # lazy snapshot; valid while parked here
        block = self.BLOCK
        ebuf = rng.exponential(size=block)
        ubuf = rng.random(size=block)
        ei = ui = 0
        flips = 0
        while True:
            if total_exit <= 0.0:
                yield (math.inf, b, None, snap)
                return
            if ei == block:
                ebuf = rng.exponential(size=block)
                ei = 0
            e = ebuf[ei]
            ei += 1
            yield (e / total_exit, b, None, snap)

            # flip one component: state class picked by exit-rate mass, then a
            # uniform member of the class, then the chain's transition row
            if ui + 3 > block:
                ubuf = rng.random(size=block)
                ui = 0
            r = ubuf[ui] * total_exit
            u_member = ubuf[ui + 1]
            u_next = ubuf[ui + 2]
            ui += 3
            c = 0
            acc = exit[0] * counts[0]
            while r >= acc and c < m - 1:
                c += 1
                acc += exit[c] * counts[c]
            lst = members[c]
            j = int(u_member * len(lst))
            if j == len(lst):
                j -= 1
            comp = lst[j]
            row = cumrows[c]
            nxt = 0
            while row[nxt] <= u_next:
                nxt += 1
            lst[j] = lst[-1]
            lst.pop()
            members[nxt].append(comp)
            counts[c] -= 1
            counts[nxt] += 1
            ids[comp] = nxt
            wrow = wrows[comp]
            b += wrow[nxt] - wrow[c]
            total_exit += exit[nxt] - exit[c]
            flips += 1
            if flips & 4095 == 0:
                # curb float drift of the incremental sums on long runs
                b = sum(wrows[k][s] for k, s in enumerate(ids))
                total_exit = sum(exit[s] * counts[s] for s in range(m))


class DeterministicFlowDynamics(FastDynamics):
    """Deterministic motion x(t) = flow(index, x0, t), emitted in fixed chunks.

    Positions are exact at any offset (no grid).  Meant for flows whose rate
    is constant on each component; ``rate_value(index)`` supplies it.
    """

    def __init__(self, flow, rate_value, chunk: float = TWO_PI):
        if chunk <= 0:
            raise ConfigurationError("chunk length must be positive")
        self.flow = flow
        self.rate_value = rate_value
        self.chunk = chunk

    def segments(self, state, rng):
        flow = self.flow
        index = state.index
        x0 = state.point
        b = self.rate_value(index)
        chunk = self.chunk
        t0 = 0.0
        while True:
            yield (chunk, b, None, lambda s, t0=t0: flow(index, x0, t0 + s))
            t0 += chunk


class GridDiffusionDynamics(FastDynamics):
    """Scalar Euler-Maruyama diffusion; rate varies continuously along paths.

    Segments carry rate value None, so the engine integrates the rate on its
    quadrature grid; positions inside a chunk are linear interpolations of the
    simulated grid.
    """

    def __init__(self, drift, sigma, em_dt: float = 1e-3, chunk_steps: int = 256):
        if em_dt <= 0 or chunk_steps < 1:
            raise ConfigurationError("em_dt must be positive and chunk_steps >= 1")
        self.drift = drift
        self.sigma = sigma
        self.em_dt = em_dt
        self.chunk_steps = chunk_steps

    def segments(self, state, rng):
        drift, sigma = self.drift, self.sigma
        h = self.em_dt
        sqrt_h = math.sqrt(h)
        x = float(state.point)
        while True:
            path = np.empty(self.chunk_steps + 1)
            path[0] = x
            noise = rng.normal(size=self.chunk_steps)
            for j in range(self.chunk_steps):
                xj = path[j]
                path[j + 1] = xj + drift(xj) * h + sigma(xj) * sqrt_h * noise[j]

            def point_at(s, path=path, h=h, top=self.chunk_steps):
                pos = s / h
                j = int(pos)
                if j >= top:
                    return float(path[top])
                frac = pos - j
                return float(path[j] * (1.0 - frac) + path[j + 1] * frac)

            yield (self.chunk_steps * h, None, None, point_at)
            x = float(path[-1])
