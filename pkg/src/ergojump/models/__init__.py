"""Built-in models: registry, parameter schemas, and start-state samplers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ConfigurationError, IndexedState, SemiMarkovSpec
from ..limits import LimitSpec
from .branching import binary_branching, build_typed_branching, stationary_root_sampler
from .contact import build_contact_process, classical_contact_path, path_graph
from .dynamics import (
    DeterministicFlowDynamics,
    FiniteCTMC,
    GridDiffusionDynamics,
    SingleChainDynamics,
    WeightedComponentsCTMC,
)
from .ladder import build_explosion_ladder
from .oscillator import build_oscillator_counterexample, oscillator_index_limit
from .two_state import build_two_state_toy, stationary_two_state

__all__ = [
    "BuiltModel",
    "FiniteCTMC",
    "SingleChainDynamics",
    "WeightedComponentsCTMC",
    "DeterministicFlowDynamics",
    "GridDiffusionDynamics",
    "binary_branching",
    "build_typed_branching",
    "build_two_state_toy",
    "build_explosion_ladder",
    "build_contact_process",
    "build_oscillator_counterexample",
    "oscillator_index_limit",
    "classical_contact_path",
    "stationary_root_sampler",
    "stationary_two_state",
    "path_graph",
    "MODEL_NAMES",
    "PARAM_SCHEMAS",
    "build_model",
]


@dataclass(frozen=True)
class BuiltModel:
    """A registry entry ready to simulate: specs plus a per-replica start sampler."""

    name: str
    spec: SemiMarkovSpec
    limit: LimitSpec | None
    start_sampler: Callable[[np.random.Generator], IndexedState]
    params: dict


def _merge_defaults(params: dict | None, defaults: dict) -> dict:
    merged = dict(defaults)
    merged.update(params or {})
    return merged


_TOY_DEFAULTS = {
    "q_ab": 1.0,
    "q_ba": 2.0,
    "b_a": 3.0,
    "b_b": 6.0,
    "index_matrix": [[0.3, 0.7], [0.6, 0.4]],
    "fresh_point": "a",
    "i0": 0,
    "x0": "a",
}


def _build_toy(params):
    p = _merge_defaults(params, _TOY_DEFAULTS)
    spec, limit = build_two_state_toy(
        p["q_ab"], p["q_ba"], p["b_a"], p["b_b"], p["index_matrix"], p["fresh_point"]
    )
    start = IndexedState(int(p["i0"]), p["x0"])
    return BuiltModel("two-state-toy", spec, limit, lambda rng: start, p)


_LADDER_DEFAULTS = {"rate_exponent": 2, "i0": 1}


def _build_ladder(params):
    p = _merge_defaults(params, _LADDER_DEFAULTS)
    spec, limit = build_explosion_ladder(int(p["rate_exponent"]))
    start = IndexedState(int(p["i0"]), 0)
    return BuiltModel("explosion-ladder", spec, limit, lambda rng: start, p)


_BRANCHING_DEFAULTS = {
    "trait_rates": [[0.0, 1.0], [1.0, 0.0]],
    "division": [3.0, 1.0],
    "death": [1.0, 1.0],
    "offspring_trait": "inherit",
    "root_trait": "stationary",
    "i0": 1,
}


def _build_branching(params):
    p = _merge_defaults(params, _BRANCHING_DEFAULTS)
    chain = FiniteCTMC(p["trait_rates"])
    spec, limit = binary_branching(chain, p["division"], p["death"], p["offspring_trait"])
    i0 = int(p["i0"])
    if i0 < 1:
        raise ConfigurationError("branching start population must be >= 1")
    if p["root_trait"] == "stationary":
        draw = chain.stationary_sampler()

        def start_sampler(rng):
            return IndexedState(i0, tuple(draw(rng) for _ in range(i0)))

    else:
        trait = int(p["root_trait"])
        if not 0 <= trait < chain.m:
            raise ConfigurationError(f"root_trait {trait} out of range")
        fixed = IndexedState(i0, (trait,) * i0)

        def start_sampler(rng):
            return fixed

    return BuiltModel("typed-branching", spec, limit, start_sampler, p)


_CONTACT_DEFAULTS = {
    "graph": {"kind": "path", "n": 3},
    "kappa01": [1.0, 3.0],
    "kappa10": [2.0, 2.0],
    "load_rates": [[0.0, 1.0], [1.0, 0.0]],
    "new_load": "inherit",
    "initial_infected": [1],
    "initial_loads": "stationary",
}


def _adjacency_from(graph):
    if isinstance(graph, dict):
        if graph.get("kind") == "path":
            return path_graph(int(graph["n"]))
        if graph.get("kind") == "adjacency":
            return graph["neighbors"]
        raise ConfigurationError(f"unknown graph kind {graph.get('kind')!r}")
    return graph


def _build_contact(params):
    p = _merge_defaults(params, _CONTACT_DEFAULTS)
    adjacency = _adjacency_from(p["graph"])
    chain = FiniteCTMC(p["load_rates"])
    spec, limit = build_contact_process(
        adjacency, p["kappa01"], p["kappa10"], chain, p["new_load"]
    )
    V = len(adjacency)
    infected = sorted(set(int(k) for k in p["initial_infected"]))
    if not infected:
        raise ConfigurationError("initial infected set must be nonempty")
    if infected[0] < 0 or infected[-1] >= V:
        raise ConfigurationError("initial infected vertex out of range")
    config = tuple(1 if k in infected else 0 for k in range(V))
    if p["initial_loads"] == "stationary":
        draw = chain.stationary_sampler()

        def start_sampler(rng):
            return IndexedState(config, tuple(draw(rng) for _ in infected))

    else:
        loads = tuple(int(s) for s in p["initial_loads"])
        if len(loads) != len(infected):
            raise ConfigurationError("initial_loads must match the infected set")
        fixed = IndexedState(config, loads)

        def start_sampler(rng):
            return fixed

    return BuiltModel("contact-process", spec, limit, start_sampler, p)


_OSCILLATOR_DEFAULTS = {"i0": 1, "x0": 0.0}


def _build_oscillator(params):
    p = _merge_defaults(params, _OSCILLATOR_DEFAULTS)
    spec = build_oscillator_counterexample()
    start = IndexedState(int(p["i0"]), float(p["x0"]))
    # the position process has no limit; the index-level limit is exact
    return BuiltModel("oscillator", spec, oscillator_index_limit(), lambda rng: start, p)


_BUILDERS = {
    "two-state-toy": _build_toy,
    "explosion-ladder": _build_ladder,
    "typed-branching": _build_branching,
    "contact-process": _build_contact,
    "oscillator": _build_oscillator,
}

MODEL_NAMES = tuple(sorted(_BUILDERS))

_NUM = {"type": "number"}
_NUM_ARRAY = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {"type": "array", "items": _NUM_ARRAY, "minItems": 1}

PARAM_SCHEMAS = {
    "two-state-toy": {
        "type": "object",
        "properties": {
            "q_ab": {"type": "number", "exclusiveMinimum": 0},
            "q_ba": {"type": "number", "exclusiveMinimum": 0},
            "b_a": {"type": "number", "minimum": 0},
            "b_b": {"type": "number", "minimum": 0},
            "index_matrix": _MATRIX,
            "fresh_point": {"enum": ["a", "b"]},
            "i0": {"type": "integer", "minimum": 0},
            "x0": {"enum": ["a", "b"]},
        },
        "additionalProperties": False,
    },
    "explosion-ladder": {
        "type": "object",
        "properties": {
            "rate_exponent": {"type": "integer", "minimum": 1},
            "i0": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "typed-branching": {
        "type": "object",
        "properties": {
            "trait_rates": _MATRIX,
            "division": _NUM_ARRAY,
            "death": _NUM_ARRAY,
            "offspring_trait": {"enum": ["inherit", "stationary"]},
            "root_trait": {
                "anyOf": [{"enum": ["stationary"]}, {"type": "integer", "minimum": 0}]
            },
            "i0": {"type": "integer", "minimum": 1},
        },
        "additionalProperties": False,
    },
    "contact-process": {
        "type": "object",
        "properties": {
            "graph": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["path", "adjacency"]},
                    "n": {"type": "integer", "minimum": 1},
                    "neighbors": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "integer"}},
                    },
                },
                "required": ["kind"],
                "additionalProperties": False,
            },
            "kappa01": _NUM_ARRAY,
            "kappa10": _NUM_ARRAY,
            "load_rates": _MATRIX,
            "new_load": {"enum": ["inherit", "stationary"]},
            "initial_infected": {"type": "array", "items": {"type": "integer"}},
            "initial_loads": {
                "anyOf": [
                    {"enum": ["stationary"]},
                    {"type": "array", "items": {"type": "integer"}},
                ]
            },
        },
        "additionalProperties": False,
    },
    "oscillator": {
        "type": "object",
        "properties": {
            "i0": {"enum": [1, 2]},
            "x0": {"type": "number"},
        },
        "additionalProperties": False,
    },
}

MODEL_DEFAULTS = {
    "two-state-toy": _TOY_DEFAULTS,
    "explosion-ladder": _LADDER_DEFAULTS,
    "typed-branching": _BRANCHING_DEFAULTS,
    "contact-process": _CONTACT_DEFAULTS,
    "oscillator": _OSCILLATOR_DEFAULTS,
}


def build_model(name: str, params: dict | None = None) -> BuiltModel:
    """Instantiate a registry model; unknown names list the valid ones."""
    if name not in _BUILDERS:
        raise ConfigurationError(
            f"unknown model {name!r}; valid models: {', '.join(MODEL_NAMES)}"
        )
    return _BUILDERS[name](params)
