import io
import math
from collections import Counter

import numpy as np
import pytest

import oracles
from ergojump import (
    ABSORBED,
    ABSORBED_TERM,
    CEMETERY_INDEX,
    ConfigurationError,
    EngineConfig,
    HORIZON,
    IndexedState,
    MAX_JUMPS,
    RateFunction,
    SemiMarkovSpec,
    TransitionKernel,
    accelerate,
    brute_force_path,
    exponential_clock,
    replica_seed,
    simulate_path,
)
from ergojump.engine import format_index, path_csv_rows, write_paths_csv
from ergojump.models import FiniteCTMC, GridDiffusionDynamics, SingleChainDynamics, build_model
from ergojump.stats import ks_against_cdf, tv_distance

TOY = build_model("two-state-toy", {})
LADDER = build_model("explosion-ladder", {})


def test_accelerate_identity_at_one():
    rng = np.random.default_rng(0)
    gen = TOY.spec.dynamics.segments(IndexedState(0, "a"), rng)
    assert accelerate(gen, 1) is gen
    with pytest.raises(ConfigurationError):
        accelerate(gen, 0)


def test_accelerate_divides_durations():
    def one_segment(state, rng):
        yield (2.0, 5.0, "p", None)
        yield (math.inf, 0.0, "p", None)

    fake = type("D", (), {"segments": staticmethod(one_segment)})
    seg = next(accelerate(fake.segments(None, None), 4))
    assert seg[0] == 0.5 and seg[1] == 5.0 and seg[2] == "p"


def test_accelerate_ctmc_holding_means():
    # two-state chain with rates (1,2): accelerated holds are Exp(n*q)
    n = 10
    chain = FiniteCTMC([[0.0, 1.0], [2.0, 0.0]])
    dyn = SingleChainDynamics(chain, lambda i, p: 1.0)
    rng = np.random.default_rng(123)
    holds = {0: [], 1: []}
    for _ in range(100_000):
        s = int(rng.random() < 0.5)
        gen = accelerate(dyn.segments(IndexedState(0, s), rng), n)
        duration = next(gen)[0]
        holds[s].append(duration)
    for s, q in ((0, 1.0), (1, 2.0)):
        xs = np.asarray(holds[s])
        se = xs.std() / math.sqrt(xs.size)
        assert abs(xs.mean() - 1.0 / (n * q)) < 3 * se + 1e-4, (s, xs.mean())


def test_simulate_path_ladder_increments():
    config = EngineConfig(horizon=10.0, max_jumps=50)
    for r in range(50):
        rec = simulate_path(LADDER.spec, 4, IndexedState(1, 0), config, replica_seed(5, r))
        assert rec.post_jump_indices == list(range(2, 2 + rec.jumps))
        assert all(b > a for a, b in zip(rec.jump_times, rec.jump_times[1:]))


def test_simulate_path_zero_mass_absorbs_after_one_jump():
    chain = FiniteCTMC([[0.0, 1.0], [1.0, 0.0]])
    rate = RateFunction(fn=lambda i, p: 1.0)
    spec = SemiMarkovSpec(
        name="absorbing",
        dynamics=SingleChainDynamics(chain, rate.fn),
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: ABSORBED, mass=0),
    )
    rec = simulate_path(spec, 1, IndexedState(0, 0), EngineConfig(horizon=100.0), 3)
    assert rec.jumps == 1
    assert rec.termination == ABSORBED_TERM
    assert rec.final_index is CEMETERY_INDEX
    assert rec.post_jump_indices == [CEMETERY_INDEX]


def test_simulate_path_max_jumps_guard():
    rec = simulate_path(TOY.spec, 1, IndexedState(0, "a"), EngineConfig(horizon=1e9, max_jumps=7), 1)
    assert rec.termination == MAX_JUMPS
    assert rec.jumps == 7


def test_piecing_out_chains_states():
    config = EngineConfig(horizon=3.0)
    rec = simulate_path(TOY.spec, 2, IndexedState(0, "a"), config, 11)
    for k in range(1, rec.jumps):
        assert rec.pre_jump_indices[k] == rec.post_jump_indices[k - 1]
    # post-jump points restart at the fresh point
    assert all(p == "a" for p in rec.post_jump_points)


def test_threshold_consistency_exact_for_segment_constant():
    # at each jump the accumulated rate integral equals the drawn threshold
    config = EngineConfig(horizon=4.0)
    for model, start in ((TOY, IndexedState(0, "a")), (LADDER, IndexedState(2, 0))):
        for r in range(30):
            rec = simulate_path(model.spec, 8, start, config, replica_seed(99, r))
            for theta, acc in zip(rec.thresholds, rec.accumulated):
                assert abs(theta - acc) <= 1e-9 * max(1.0, theta)


def test_determinism_bit_exact():
    config = EngineConfig(horizon=2.0)
    a = simulate_path(TOY.spec, 16, IndexedState(0, "a"), config, (42, 7))
    b = simulate_path(TOY.spec, 16, IndexedState(0, "a"), config, (42, 7))
    assert a.jump_times == b.jump_times
    assert a.post_jump_indices == b.post_jump_indices
    assert a.thresholds == b.thresholds
    assert a.final_point == b.final_point


def test_record_shape_and_index_at():
    config = EngineConfig(horizon=2.0)
    rec = simulate_path(TOY.spec, 4, IndexedState(0, "a"), config, 21)
    assert rec.index_path[0] == (0.0, 0)
    assert rec.index_at(0.0) == 0 or rec.jump_times[0] == 0.0
    if rec.jumps:
        t = rec.jump_times[0]
        assert rec.index_at(t) == rec.post_jump_indices[0]
        assert rec.index_at(t - 1e-12) == rec.start_index
    assert rec.final_time == 2.0 and rec.termination == HORIZON


def test_brute_force_zero_rate_never_jumps():
    chain = FiniteCTMC([[0.0, 1.0], [1.0, 0.0]])
    rate = RateFunction(fn=lambda i, p: 0.0)
    spec = SemiMarkovSpec(
        name="null",
        dynamics=SingleChainDynamics(chain, rate.fn),
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: s, mass=1),
    )
    rec = brute_force_path(spec, 1, IndexedState(0, 0), 1e-3, 5.0, 0)
    assert rec.jumps == 0 and rec.termination == HORIZON


def test_brute_force_constant_rate_mean():
    # tau_1 ~ Exp(c): empirical mean within 1% of 1/c over 1e5 replicas
    c = 2.0
    chain = FiniteCTMC([[0.0, 1.0], [1.0, 0.0]])
    rate = RateFunction(fn=lambda i, p: c)
    spec = SemiMarkovSpec(
        name="const",
        dynamics=SingleChainDynamics(chain, rate.fn),
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: IndexedState(0, 0), mass=1),
    )
    taus = []
    for r in range(100_000):
        rec = brute_force_path(spec, 1, IndexedState(0, 0), 1e-4, 40.0, replica_seed(8, r), max_jumps=1)
        taus.append(rec.jump_times[0])
    assert abs(np.mean(taus) - 1.0 / c) < 0.01 / c


def test_brute_force_vs_engine_first_index():
    # cross-validation target at reduced size; the acceptance suite runs 1e5
    config = EngineConfig(horizon=4.0, max_jumps=1, record_points=False)
    eng, oracle = Counter(), Counter()
    for r in range(4000):
        rec = simulate_path(TOY.spec, 1, IndexedState(0, "a"), config, replica_seed(70, r))
        eng[rec.post_jump_indices[0] if rec.jumps else None] += 1
        rec = brute_force_path(
            TOY.spec, 1, IndexedState(0, "a"), 1e-4, 4.0, replica_seed(71, r), max_jumps=1
        )
        oracle[rec.post_jump_indices[0] if rec.jumps else None] += 1
    assert tv_distance(eng, oracle) < 0.04


def test_coupled_seeds_agree_to_grid_error():
    # same seed => same fast path and threshold; jump times differ by O(dt)
    for r in range(20):
        a = simulate_path(
            TOY.spec, 1, IndexedState(0, "a"), EngineConfig(horizon=6.0, max_jumps=1), replica_seed(3, r)
        )
        b = brute_force_path(
            TOY.spec, 1, IndexedState(0, "a"), 1e-4, 6.0, replica_seed(3, r), max_jumps=1
        )
        if a.jumps and b.jumps:
            assert abs(a.jump_times[0] - b.jump_times[0]) < 5e-4


def test_continuous_rate_grid_quadrature():
    # Ornstein-Uhlenbeck-driven rate b(x) = x^2; engine quadrature vs brute force
    dyn = GridDiffusionDynamics(drift=lambda x: -x, sigma=lambda x: 1.0, em_dt=1e-3)
    rate = RateFunction(fn=lambda i, p: p * p, segment_constant=False)
    spec = SemiMarkovSpec(
        name="ou-squared",
        dynamics=dyn,
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: IndexedState(0, 0.0), mass=1),
    )
    config = EngineConfig(horizon=10.0, max_jumps=1, dt=1e-3, record_points=False)
    taus_e, taus_b = [], []
    for r in range(600):
        rec = simulate_path(spec, 1, IndexedState(0, 1.0), config, replica_seed(13, r))
        taus_e.append(rec.jump_times[0] if rec.jumps else math.inf)
        rec = brute_force_path(spec, 1, IndexedState(0, 1.0), 1e-3, 10.0, replica_seed(13, r), max_jumps=1)
        taus_b.append(rec.jump_times[0] if rec.jumps else math.inf)
    # coupled seeds: same driving noise, so the jump times agree to O(dt) terms
    paired = [
        (a, b) for a, b in zip(taus_e, taus_b) if math.isfinite(a) and math.isfinite(b)
    ]
    assert len(paired) > 500
    diffs = [abs(a - b) for a, b in paired]
    assert np.median(diffs) < 5e-3, np.median(diffs)


def test_csv_rows_sorted_and_stable():
    config = EngineConfig(horizon=1.0)
    rows = []
    for r in (2, 0, 1):
        rec = simulate_path(TOY.spec, 4, IndexedState(0, "a"), config, replica_seed(1, r))
        rows.extend(path_csv_rows(rec, r))
    buf1 = io.StringIO()
    write_paths_csv(rows, buf1)
    buf2 = io.StringIO()
    write_paths_csv(list(reversed(rows)), buf2)
    assert buf1.getvalue() == buf2.getvalue()
    header = buf1.getvalue().splitlines()[0]
    assert header == "replica_id,k,tau_k,pre_index,post_index"


def test_format_index_variants():
    assert format_index(3) == "3"
    assert format_index((0, 1, 1)) == "(0,1,1)"
    assert format_index(CEMETERY_INDEX) == "cemetery"
