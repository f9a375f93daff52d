import math

import numpy as np
import pytest

import oracles
from ergojump import (
    ABSORBED,
    CEMETERY_INDEX,
    ConfigurationError,
    EngineConfig,
    IndexedState,
    RateFunction,
    SemiMarkovSpec,
    StationarySummary,
    TransitionKernel,
    clock_threshold,
    exponential_clock,
    project_index,
    replica_seed,
    sample_jump_time,
    simulate_path,
    uniform_clock,
    validate_spec,
)
from ergojump.models import FiniteCTMC, SingleChainDynamics, build_model
from ergojump.stats import ks_against_cdf


def test_project_index_total():
    assert project_index(IndexedState(3, "whatever")) == 3
    assert project_index(ABSORBED) is CEMETERY_INDEX
    # tuple-valued points: the index is carried, not derived
    assert project_index(IndexedState(2, (0, 1))) == 2


def test_clock_threshold_exponential():
    clock = exponential_clock()
    assert abs(clock_threshold(clock, 0.5) - oracles.EXP_CLOCK_HALF) < 1e-12
    assert clock_threshold(clock, 1e-12) < 1e-9  # continuity at 0
    with pytest.raises(ConfigurationError):
        clock_threshold(clock, 0.0)
    with pytest.raises(ConfigurationError):
        clock_threshold(clock, 1.0)


def test_clock_threshold_uniform():
    clock = uniform_clock()
    assert clock_threshold(clock, 0.25) == 0.25
    assert uniform_clock(2.0).inverse(0.25) == 0.5


@pytest.mark.parametrize("clock", [exponential_clock(), uniform_clock(), uniform_clock(3.0)])
def test_generalized_inverse_sandwich(clock):
    # G^{-1}(G(x)) <= x and G(G^{-1}(u)) >= u on a 1000-point grid
    for x in np.linspace(1e-3, 5.0, 1000):
        g = clock.cdf(float(x))
        if 0.0 < g < 1.0:
            assert clock.inverse(g) <= x + 1e-9
    for u in np.linspace(1e-3, 0.999, 1000):
        theta = clock.inverse(float(u))
        if math.isfinite(theta):
            assert clock.cdf(theta) >= u - 1e-9


def _constant_rate_spec(c):
    chain = FiniteCTMC([[0.0, 1.0], [1.0, 0.0]])
    rate = RateFunction(fn=lambda i, p: c, segment_constant=True)
    return SemiMarkovSpec(
        name="const",
        dynamics=SingleChainDynamics(chain, rate.fn),
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: IndexedState(0, 0), mass=1),
        probe_states=(IndexedState(0, 0),),
    )


def test_exponential_clock_memorylessness():
    # constant rate c with the exponential clock: zeta ~ Exp(c), 1e5 draws
    c = 2.5
    spec = _constant_rate_spec(c)
    config = EngineConfig(horizon=30.0, max_jumps=1, record_points=False)
    taus = []
    for r in range(100_000):
        rec = simulate_path(spec, 1, IndexedState(0, 0), config, replica_seed(314, r))
        taus.append(rec.jump_times[0] if rec.jumps else math.inf)
    report = ks_against_cdf(taus, lambda t: -math.expm1(-c * t), alpha=0.01, horizon=30.0)
    assert report.passed, report


def test_validate_spec_clean_models():
    for name in ("two-state-toy", "explosion-ladder", "typed-branching", "contact-process", "oscillator"):
        built = build_model(name, {})
        report = validate_spec(built.spec)
        assert report.ok, f"{name}: {report}"


def test_validate_spec_flags_negative_rate():
    spec = _constant_rate_spec(-1.0)
    report = validate_spec(spec)
    assert any(code == "negative-rate" for code, _ in report.violations)


def test_validate_spec_flags_index_leak():
    chain = FiniteCTMC([[0.0, 1.0], [1.0, 0.0]])
    rate = RateFunction(fn=lambda i, p: 1.0)
    spec = SemiMarkovSpec(
        name="leaky",
        dynamics=SingleChainDynamics(chain, rate.fn),
        clock=exponential_clock(),
        rate=rate,
        kernel=TransitionKernel(sample=lambda s, rng: s, mass=1),
        probe_states=(IndexedState(0, 0),),
        membership=lambda i, p: p == 0,  # declares state 1 out of bounds
    )
    report = validate_spec(spec)
    assert any(code == "index-leak" for code, _ in report.violations)


def test_validate_spec_flags_kernel_mass():
    spec = _constant_rate_spec(1.0)
    bad = SemiMarkovSpec(
        name="bad-mass",
        dynamics=spec.dynamics,
        clock=spec.clock,
        rate=spec.rate,
        kernel=TransitionKernel(sample=lambda s, rng: ABSORBED, mass=1),
        probe_states=spec.probe_states,
    )
    report = validate_spec(bad)
    assert any(code == "kernel-mass" for code, _ in report.violations)


def test_stationary_summary_invariants():
    with pytest.raises(ConfigurationError):
        StationarySummary(index=0, mean_rate=-1.0)
    with pytest.raises(ConfigurationError):
        StationarySummary(index=0, mean_rate=0.0, biased_sampler=lambda rng: 0)
    StationarySummary(index=0, mean_rate=0.0)  # zero rate without sampler is fine


def test_rate_function_absorbed_convention():
    rate = RateFunction(fn=lambda i, p: 7.0)
    assert rate.value(ABSORBED) == 0.0
    assert rate.value(IndexedState(0, "x")) == 7.0


def test_replica_seed_is_counter_based():
    a = replica_seed(5, 7).generate_state(4)
    b = replica_seed(5, 7).generate_state(4)
    c = replica_seed(5, 8).generate_state(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_jump_time_zero_rate_is_infinite():
    spec = _constant_rate_spec(0.0)
    config = EngineConfig(horizon=5.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        zeta, pre = sample_jump_time(
            spec.dynamics.segments(IndexedState(0, 0), rng),
            spec.rate,
            spec.clock,
            IndexedState(0, 0),
            config,
            rng,
        )
        assert zeta == math.inf
        assert pre.index == 0
