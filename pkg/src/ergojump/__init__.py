"""ergojump: Monte Carlo for jump processes driven by fast ergodic dynamics.

The library simulates two-timescale jump processes built by piecing out
(fast dynamics between jumps, a clock driven by the accumulated rate
integral, a transition kernel at jumps), simulates the autonomous pure-jump
processes obtained when the fast dynamics are fully accelerated, and checks
statistically that the former converge to the latter.
"""

from .core import (
    ABSORBED,
    CEMETERY_INDEX,
    ConfigurationError,
    FastDynamics,
    FastModel,
    IndexedState,
    JumpClock,
    RateFunction,
    SemiMarkovSpec,
    StationarySummary,
    TransitionKernel,
    ValidationReport,
    clock_threshold,
    exponential_clock,
    project_index,
    replica_seed,
    uniform_clock,
    validate_spec,
)
from .engine import (
    ABSORBED_TERM,
    HORIZON,
    MAX_JUMPS,
    EngineConfig,
    PathRecord,
    accelerate,
    brute_force_path,
    sample_jump_time,
    simulate_path,
)
from .limits import (
    ErgodicEstimate,
    LimitSpec,
    biased_stationary_sample,
    ergodic_average,
    sample_limit_jump_time,
    simulate_limit_path,
    stationary_rate,
    step_chain_y,
    step_jump_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ABSORBED",
    "ABSORBED_TERM",
    "CEMETERY_INDEX",
    "ConfigurationError",
    "EngineConfig",
    "ErgodicEstimate",
    "FastDynamics",
    "FastModel",
    "HORIZON",
    "IndexedState",
    "JumpClock",
    "LimitSpec",
    "MAX_JUMPS",
    "PathRecord",
    "RateFunction",
    "SemiMarkovSpec",
    "StationarySummary",
    "TransitionKernel",
    "ValidationReport",
    "accelerate",
    "biased_stationary_sample",
    "brute_force_path",
    "clock_threshold",
    "ergodic_average",
    "exponential_clock",
    "project_index",
    "replica_seed",
    "sample_jump_time",
    "sample_limit_jump_time",
    "simulate_limit_path",
    "simulate_path",
    "stationary_rate",
    "step_chain_y",
    "step_jump_chain",
    "uniform_clock",
    "validate_spec",
]
