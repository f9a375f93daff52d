"""Independent oracles for the derived test targets.

Everything here is computed from first principles with numpy/math only (no
package imports), so the test suite compares simulator output against values
produced by a second, unrelated route: linear algebra for stationary laws,
matrix exponentials for first-jump laws, fixed-point iteration for branching
extinction.  Running the module directly prints and checks all frozen targets.
"""

import math

import numpy as np


# -- two-state fast chain -----------------------------------------------------

def two_state_stationary(q_ab, q_ba):
    """Solve pi Q = 0 directly (2x2 linear system, not detailed balance)."""
    Q = np.array([[-q_ab, q_ab], [q_ba, -q_ba]], dtype=float)
    A = np.vstack([Q.T, np.ones(2)])
    pi, *_ = np.linalg.lstsq(A, np.array([0.0, 0.0, 1.0]), rcond=None)
    return pi


def two_state_mean_rate(q_ab, q_ba, b_a, b_b):
    pi = two_state_stationary(q_ab, q_ba)
    return float(pi @ np.array([b_a, b_b]))


def two_state_biased_probs(q_ab, q_ba, b_a, b_b):
    pi = two_state_stationary(q_ab, q_ba)
    w = pi * np.array([b_a, b_b])
    return w / w.sum()


def phase_type_cdf(n, q_ab=1.0, q_ba=2.0, b_a=3.0, b_b=6.0, start=0):
    """Exact CDF of the first jump time at acceleration n, from one point.

    With an exponential clock the jump is a killing at rate b, so the survival
    function is the start row sum of exp(t (n Q - diag(b))).
    """
    Q = np.array([[-q_ab, q_ab], [q_ba, -q_ba]], dtype=float)
    M = n * Q - np.diag([b_a, b_b])
    w, V = np.linalg.eig(M)
    c = (np.eye(2)[start] @ V) * (np.linalg.inv(V) @ np.ones(2))

    def cdf(t):
        return float(1.0 - (c * np.exp(w * t)).sum().real)

    return cdf


def ks_distance_to_exponential(n, rate=4.0, t_max=4.0, grid=200001, **kw):
    cdf = phase_type_cdf(n, **kw)
    ts = np.linspace(1e-9, t_max, grid)
    F = np.array([cdf(t) for t in ts])
    return float(np.max(np.abs(F - (1.0 - np.exp(-rate * ts)))))


# -- chains in general --------------------------------------------------------

def ctmc_stationary(rates):
    """Stationary law of a finite chain from its off-diagonal rate matrix."""
    R = np.array(rates, dtype=float)
    np.fill_diagonal(R, 0.0)
    Q = R - np.diag(R.sum(axis=1))
    A = np.vstack([Q.T, np.ones(R.shape[0])])
    rhs = np.zeros(R.shape[0] + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return pi


# -- branching ----------------------------------------------------------------

def branching_limit_rates(trait_rates, division, death):
    """Stationary-averaged division and death rates (the limit birth/death pair)."""
    chi = ctmc_stationary(trait_rates)
    return float(chi @ np.asarray(division, float)), float(chi @ np.asarray(death, float))


def branching_offspring_law(trait_rates, division, death):
    """Limit offspring-count pmf (0 or 2 offspring) for a binary model."""
    chi = ctmc_stationary(trait_rates)
    r = np.asarray(division, float)
    q = np.asarray(death, float)
    beta_bar = float(chi @ (r + q))
    return {0: float(chi @ q) / beta_bar, 2: float(chi @ r) / beta_bar}


def bd_extinction_probability(birth, death):
    """Extinction probability of a linear birth-death process from one individual."""
    return 1.0 if birth <= death else death / birth


def finite_n_extinction_inherit(division, death, flip, n, tol=1e-14, iters=10**6):
    """Exact extinction probabilities of the two-type prelimit branching tree.

    Trait flips A<->B at rate flip*n; division r_s replaces the parent by two
    copies of its own trait, death q_s removes it.  Smallest fixed point of
    the offspring-generating system, iterated from zero.
    """
    rA, rB = division
    qA, qB = death
    c = flip * n
    eA = eB = 0.0
    for _ in range(iters):
        nA = (rA * eA * eA + qA + c * eB) / (rA + qA + c)
        nB = (rB * eB * eB + qB + c * eA) / (rB + qB + c)
        if abs(nA - eA) < tol and abs(nB - eB) < tol:
            return nA, nB
        eA, eB = nA, nB
    return eA, eB


# -- ladder -------------------------------------------------------------------

def ladder_explosion_mean(exponent=2, start=1, terms=10**6):
    """Mean of the limit explosion time: sum of inverse climb rates."""
    i = np.arange(start, start + terms, dtype=float)
    return float(np.sum(i ** (-exponent)))


def ladder_explosion_fraction(T, exponent=2, start=1, reps=200000, terms=20000, seed=0):
    """Monte Carlo of P(sum_i Exp(i^-exponent) <= T) by direct summation."""
    rng = np.random.default_rng(seed)
    i = np.arange(start, start + terms, dtype=float)
    total = np.zeros(reps)
    chunk = 2000
    for lo in range(0, terms, chunk):
        scale = i[lo : lo + chunk] ** (-exponent)
        total += rng.exponential(1.0, size=(reps, scale.size)) @ scale
    return float((total <= T).mean())


# -- contact process ----------------------------------------------------------

def contact_limit_rates(load_rates, kappa01, kappa10):
    nu = ctmc_stationary(load_rates)
    return float(nu @ np.asarray(kappa01, float)), float(nu @ np.asarray(kappa10, float))


# -- misc closed forms ---------------------------------------------------------

EXP_CLOCK_HALF = math.log(2.0)  # G^{-1}(1/2) for G(x) = 1 - e^{-x}


def wilson_ci(successes, n, z=2.5758293035489004):
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def check_oracles():
    """Recompute and display every frozen target; assert the known identities."""
    pi = two_state_stationary(1.0, 2.0)
    assert np.allclose(pi, [2 / 3, 1 / 3])
    mb = two_state_mean_rate(1.0, 2.0, 3.0, 6.0)
    assert abs(mb - 4.0) < 1e-12
    assert np.allclose(two_state_biased_probs(1.0, 2.0, 3.0, 6.0), [0.5, 0.5])
    print(f"two-state: stationary {pi}, mean rate {mb}")

    for n in (1, 64):
        d = ks_distance_to_exponential(n)
        print(f"phase-type KS to Exp(4) at n={n}: {d:.5f}")
    assert ks_distance_to_exponential(1) < 0.10
    assert ks_distance_to_exponential(64) < 0.01

    rbar, qbar = branching_limit_rates([[0, 1], [1, 0]], [4, 0], [1, 1])
    assert (rbar, qbar) == (2.0, 1.0)
    law = branching_offspring_law([[0, 1], [1, 0]], [4, 0], [1, 1])
    assert abs(law[2] - 2 / 3) < 1e-12
    print(f"branching (4,0)/(1,1): rbar {rbar}, qbar {qbar}, offspring {law}")
    rbar, qbar = branching_limit_rates([[0, 1], [1, 0]], [3, 1], [1, 1])
    assert (rbar, qbar) == (2.0, 1.0)
    eA, eB = finite_n_extinction_inherit((3, 1), (1, 1), 1.0, 64)
    print(f"branching (3,1)/(1,1) at n=64: extinction A {eA:.6f}, B {eB:.6f}, "
          f"stationary-root {(eA + eB) / 2:.6f}")
    assert abs((eA + eB) / 2 - 0.5) < 5e-4
    assert abs(bd_extinction_probability(2.0, 1.0) - 0.5) < 1e-15

    mean_explosion = ladder_explosion_mean()
    print(f"ladder explosion-time mean: {mean_explosion:.6f} (pi^2/6 = {math.pi**2 / 6:.6f})")
    assert abs(mean_explosion - math.pi**2 / 6) < 1e-5
    frac = ladder_explosion_fraction(3.0, reps=50000)
    print(f"ladder limit P(explode by T=3) ~= {frac:.4f}")
    assert frac > 0.5

    lam, mu = contact_limit_rates([[0, 1], [1, 0]], [1, 3], [2, 2])
    assert (lam, mu) == (2.0, 2.0)
    print(f"contact path-3 limit: infection {lam}, healing {mu}")
    print("all oracle identities hold")


if __name__ == "__main__":
    check_oracles()
