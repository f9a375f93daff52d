"""Acceptance battery: one test per criterion, printed as PASS/FAIL lines.

Statistical targets were each reproduced by an independent oracle before
being frozen here (see oracles.py): stationary laws by linear algebra, the
toy's first-jump law by matrix exponentials, branching extinction by the
two-type fixed point, ladder explosion by direct summation of exponentials.
Runtime-capped criteria assert their wall-clock budgets.
"""

import math
import time
import warnings
from collections import Counter

import numpy as np
import pytest

import oracles
from ergojump import (
    EngineConfig,
    IndexedState,
    project_index,
    replica_seed,
    simulate_path,
    step_chain_y,
    step_jump_chain,
)
from ergojump.engine import _first_crossing, accelerate
from ergojump.models import build_model, classical_contact_path
from ergojump.parallel import map_replicas
from ergojump.stats import (
    explosion_gap,
    extinction_probability,
    fixed_time_marginal_test,
    jump_chain_convergence,
    jump_time_convergence,
    ks_against_cdf,
    oracle_equivalence,
    run_limit_path,
    run_path,
    tv_distance,
    wilson_interval,
)

WORKERS = 2
FULL = 100_000


def note(criterion, passed, message):
    import conftest

    flag = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE CRITERION {criterion}: {flag} - {message}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert passed, f"criterion {criterion}: {message}"


def test_criterion_1_jump_time_law():
    """First-jump-time KS to the limit law: <= 0.10 at n=1, <= 0.02 at n=64."""
    t0 = time.monotonic()
    toy = build_model("two-state-toy", {})
    reports = jump_time_convergence(
        toy,
        [1, 64],
        FULL,
        horizon=4.0,
        seed=2001,
        thresholds={1: 0.10, 64: 0.02},
        workers=WORKERS,
    )
    elapsed = time.monotonic() - t0
    by_n = {r.details["n"]: r for r in reports}
    ok = (
        by_n[1].passed
        and by_n[64].passed
        and by_n[64].value < by_n[1].value
        and elapsed <= 60.0
    )
    note(
        1,
        ok,
        f"KS(n=1)={by_n[1].value:.4f}<=0.10, KS(n=64)={by_n[64].value:.4f}<=0.02, "
        f"strictly decreasing, {elapsed:.0f}s<=60s "
        f"(exact-law oracle: {oracles.ks_distance_to_exponential(1):.4f} at n=1)",
    )


def test_criterion_2_jump_chain_rows():
    """Post-jump index rows at n=64 within TV 0.02 of the analytic matrix rows."""
    results = []
    for i0 in (0, 1):
        toy = build_model("two-state-toy", {"i0": i0})
        reports = jump_chain_convergence(
            toy, 64, 1, [4.0], FULL, seed=2100 + i0, tv_threshold=0.02, workers=WORKERS
        )
        row_report = [r for r in reports if "row TV" in r.name][0]
        joint_report = [r for r in reports if "joint" in r.name][0]
        results.append((i0, row_report, joint_report))
    ok = all(r.passed and j.passed for _, r, j in results)
    msg = ", ".join(f"row {i0}: TV={r.value:.4f}" for i0, r, _ in results)
    note(2, ok, f"{msg} (threshold 0.02 at {FULL} replicas, n=64)")


def test_criterion_3_fixed_time_marginals():
    """Index marginals at T in {0.25, 0.5, 1.0} vs limit MC: TV <= 0.02 each."""
    toy = build_model("two-state-toy", {})
    reports = fixed_time_marginal_test(
        toy, [0.25, 0.5, 1.0], 64, 50, FULL, seed=2200, tv_threshold=0.02, workers=WORKERS
    )
    guards = [
        min(r.details["guard_prob_prelimit"], r.details["guard_prob_limit"]) for r in reports
    ]
    ok = all(r.passed for r in reports) and all(g >= 0.99 for g in guards)
    msg = ", ".join(f"T={r.details['time']:g}: TV={r.value:.4f}" for r in reports)
    note(3, ok, f"{msg}; guard prob >= {min(guards):.4f} with k_guard=50")


def test_criterion_4_branching_extinction():
    """Binary branching at n=64: extinction CI (prelimit and limit) contains 1/2."""
    t0 = time.monotonic()
    br = build_model("typed-branching", {})
    config = EngineConfig(horizon=50.0, max_jumps=96, record_points=False)

    def prelimit_task(_r, rseed):
        rec = run_path(br, 64, config, rseed)
        return rec.final_index, rec.termination

    def limit_task(_r, rseed):
        rec = run_limit_path(br, 50.0, 96, rseed)
        return rec.final_index, rec.termination

    pre_out = map_replicas(prelimit_task, FULL, 2300, WORKERS)
    lim_out = map_replicas(limit_task, FULL, 2301, WORKERS)
    with warnings.catch_warnings():
        # survivors hit the jump guard by design (documented cutoff at
        # population ~32+, misclassification < 1e-9)
        warnings.simplefilter("ignore")
        pre = extinction_probability(pre_out)
        lim = extinction_probability(lim_out)
    elapsed = time.monotonic() - t0
    target = oracles.bd_extinction_probability(2.0, 1.0)
    ok = (
        pre["ci99"][0] <= target <= pre["ci99"][1]
        and lim["ci99"][0] <= target <= lim["ci99"][1]
        and elapsed <= 300.0
    )
    note(
        4,
        ok,
        f"prelimit CI [{pre['ci99'][0]:.4f},{pre['ci99'][1]:.4f}] and limit CI "
        f"[{lim['ci99'][0]:.4f},{lim['ci99'][1]:.4f}] both contain {target}, "
        f"{elapsed:.0f}s<=300s",
    )


def test_criterion_5_contact_process_limit():
    """Infected-set law at T=1, n=64 within TV 0.03 of a direct contact simulation."""
    ct = build_model("contact-process", {})
    config = EngineConfig(horizon=1.0, max_jumps=100_000, record_points=False)

    def prelimit_task(_r, rseed):
        return run_path(ct, 64, config, rseed).final_index

    lam, mu = oracles.contact_limit_rates([[0, 1], [1, 0]], [1, 3], [2, 2])
    graph = [(1,), (0, 2), (1,)]

    def classical_task(_r, rseed):
        rec = classical_contact_path(graph, lam, mu, (0, 1, 0), 1.0, rseed)
        return rec.final_index

    pre = Counter(map_replicas(prelimit_task, FULL, 2400, WORKERS))
    direct = Counter(map_replicas(classical_task, FULL, 2401, WORKERS))
    value = tv_distance(pre, direct)
    note(
        5,
        value <= 0.03,
        f"TV={value:.4f}<=0.03 vs classical contact process with rates "
        f"(infection {lam}, healing {mu}) at {FULL} replicas",
    )


def test_criterion_6_explosion_gap():
    """Ladder at T=3, guard 1e4: limit fraction >= 0.2, prelimit bounded < 0.01."""
    lad = build_model("explosion-ladder", {})
    result = explosion_gap(lad, 3.0, 8, 10_000, 3000, seed=2500, workers=WORKERS)
    pre_upper = result["prelimit_ci99"][1]
    lim_lower = result["limit_ci99"][0]
    ok = pre_upper < 0.01 and lim_lower >= 0.2
    note(
        6,
        ok,
        f"prelimit 99% upper {pre_upper:.4f}<0.01 (fraction "
        f"{result['prelimit_fraction']:.4f}), limit 99% lower {lim_lower:.4f}>=0.2 "
        f"(fraction {result['limit_fraction']:.4f}; direct-sum oracle ~"
        f"{oracles.ladder_explosion_fraction(3.0, reps=20000):.3f})",
    )


def test_criterion_7_oscillation_negative_control():
    """No position convergence (point at t=1 is cos(n)) while the index law holds."""
    osc = build_model("oscillator", {})
    config = EngineConfig(horizon=1.0)
    worst = 0.0
    no_jump_fracs = []
    for n in range(1, 11):
        hits = 0
        for r in range(600):
            rec = simulate_path(osc.spec, n, IndexedState(1, 0.0), config, replica_seed(2600 + n, r))
            if rec.jumps == 0:
                hits += 1
                worst = max(worst, abs(rec.final_point - math.cos(n)))
        no_jump_fracs.append(hits / 600)
    points_ok = worst < 1e-9
    # conditioning event has probability e^-1
    fracs_ok = all(abs(f - math.exp(-1)) < 0.06 for f in no_jump_fracs)

    reports = jump_time_convergence(
        osc, [1, 64], FULL, horizon=8.0, seed=2650, thresholds={1: 0.10, 64: 0.02}, workers=WORKERS
    )
    law_ok = all(r.passed for r in reports)
    note(
        7,
        points_ok and fracs_ok and law_ok,
        f"conditional point error {worst:.2e} (cos(n) to float precision, n=1..10), "
        f"no-jump fraction ~ e^-1, index-time KS at n=1/64: "
        f"{reports[0].value:.4f}/{reports[1].value:.4f}",
    )


def test_criterion_8_oracle_equivalence():
    """Engine vs dt=1e-4 fixed-step oracle: joint (tau bin, index) TV <= 0.01."""
    horizons = {
        "two-state-toy": 6.0,
        "explosion-ladder": 14.0,
        "typed-branching": 6.0,
        "contact-process": 4.0,
        "oscillator": 10.0,
    }
    values = {}
    ok = True
    for name, horizon in horizons.items():
        model = build_model(name, {})
        report = oracle_equivalence(
            model, FULL, seed=2700, dt=1e-4, horizon=horizon, tv_threshold=0.01, workers=WORKERS
        )
        values[name] = report.value
        ok = ok and report.passed
    msg = ", ".join(f"{k}: {v:.4f}" for k, v in values.items())
    note(8, ok, f"TV <= 0.01 per model at n=1, {FULL} replicas: {msg}")


def test_criterion_9_structural_suite():
    """Path structure, threshold bookkeeping, chain coupling, determinism."""
    t0 = time.monotonic()
    toy = build_model("two-state-toy", {})
    lad = build_model("explosion-ladder", {})
    br = build_model("typed-branching", {})
    ct = build_model("contact-process", {})

    # strictly increasing jump times + piecing-out index chaining + membership
    ensembles = (
        (toy, 16, EngineConfig(horizon=2.0)),
        (lad, 8, EngineConfig(horizon=3.0, max_jumps=500)),
        (br, 8, EngineConfig(horizon=4.0, max_jumps=300)),
        (ct, 8, EngineConfig(horizon=1.5)),
    )
    for model, n, config in ensembles:
        for r in range(200):
            rec = run_path(model, n, config, replica_seed(2800, r))
            assert all(b > a for a, b in zip(rec.jump_times, rec.jump_times[1:]))
            for k in range(1, rec.jumps):
                assert rec.pre_jump_indices[k] == rec.post_jump_indices[k - 1]
            if model.spec.membership is not None and rec.pre_jump_points is not None:
                for i, p in zip(rec.pre_jump_indices, rec.pre_jump_points):
                    assert model.spec.membership(i, p)
            # threshold consistency: accumulated rate integral hits the drawn
            # threshold exactly (segment-constant rates)
            for theta, acc in zip(rec.thresholds, rec.accumulated):
                assert abs(theta - acc) <= 1e-9 * max(1.0, theta)

    # index/position chain coupling: exact draw-for-draw equality
    rng_y = np.random.default_rng(2900)
    rng_i = np.random.default_rng(2900)
    for _ in range(20_000):
        y = step_chain_y(toy.limit, IndexedState(0, "a"), rng_y)
        assert project_index(y) == step_jump_chain(toy.limit, 0, rng_i)

    # determinism under seed: bit-identical records
    for model, n in ((toy, 16), (br, 8)):
        config = EngineConfig(horizon=2.0, max_jumps=200)
        a = run_path(model, n, config, replica_seed(3000, 5))
        b = run_path(model, n, config, replica_seed(3000, 5))
        assert a.jump_times == b.jump_times
        assert a.post_jump_indices == b.post_jump_indices
        assert a.thresholds == b.thresholds

    # the public accelerate() wrapper and the engine's inline scaling produce
    # the same crossing from coupled substreams
    for r in range(200):
        n = 4
        config = EngineConfig(horizon=3.0)
        u1, f1 = (np.random.default_rng(c) for c in replica_seed(3100, r).spawn(2))
        gen = toy.spec.dynamics.segments(IndexedState(0, "a"), f1)
        z1 = _first_crossing(accelerate(gen, n), 1, toy.spec.rate, toy.spec.clock, 0, 3.0, config, u1)
        u2, f2 = (np.random.default_rng(c) for c in replica_seed(3100, r).spawn(2))
        gen = toy.spec.dynamics.segments(IndexedState(0, "a"), f2)
        z2 = _first_crossing(gen, n, toy.spec.rate, toy.spec.clock, 0, 3.0, config, u2)
        assert z1[0] == z2[0] and z1[1] == z2[1] and z1[2] == z2[2]

    elapsed = time.monotonic() - t0
    note(
        9,
        elapsed < 30.0,
        f"monotone jumps, index chaining, membership, threshold consistency, "
        f"chain coupling, determinism, acceleration equivalence in {elapsed:.1f}s<30s",
    )
