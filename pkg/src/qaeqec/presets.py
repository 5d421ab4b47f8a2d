"""Run configurations: defaults, named presets, JSON schema and builders for library objects."""

from __future__ import annotations

import copy
from typing import Any

import jsonschema
import numpy as np

from .codes import StabilizerCode, five_qubit_code, four_qubit_erasure_code, three_qubit_code
from .experiments import NoiseSpec
from .training import TrainingConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Configuration rejected before any computation."""


_NUM = {"type": "number"}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_GRID = {
    "oneOf": [
        {"type": "array", "items": _PROB, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _PROB, "stop": _PROB, "step": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["start", "stop", "step"],
            "additionalProperties": False,
        },
    ]
}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA: dict[str, Any] = _obj(
    {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "code": {"enum": ["3qc", "4qec", "5qc"]},
        "code_strategy": {"enum": ["standard", "alternative", "bitflip"]},
        "self_inverse": {"type": "boolean"},
        "states": {"enum": ["three", "six"]},
        "noise": _obj(
            {
                "kind": {"enum": ["none", "bitflip", "depolarizing", "correlated", "erasure"]},
                "p": _PROB,
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "p_loss": _PROB,
                "p_comp": _PROB,
            },
            ["kind"],
        ),
        "training": _obj(
            {
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
                "minibatch_size": {"type": "integer", "minimum": 1},
                "beta1": _PROB,
                "beta2": _PROB,
                "nadam_eps": {"type": "number", "exclusiveMinimum": 0},
                "max_restarts": {"type": "integer", "minimum": 0},
                "restart_threshold": _NUM,
                "optimizer": {"enum": ["nadam", "plain"]},
                "margin": {"type": ["number", "null"]},
            }
        ),
        "collection": _obj(
            {
                "max_erasures": {"type": "integer", "minimum": 1},
                "member_threshold": {"type": ["number", "null"]},
            }
        ),
        "study": _obj({"eta_grid": {"type": ["array", "null"], "items": {"type": "number", "exclusiveMinimum": 0}}}),
        "validation": _obj(
            {
                "n_samples": {"type": "integer", "minimum": 0},
                "p_grid": {"type": ["array", "null"], "items": _PROB},
                "internal_p_n": _PROB,
            }
        ),
        "discovery": _obj(
            {
                "n": {"type": "integer", "minimum": 2, "maximum": 6},
                "sigma": {"type": "number", "minimum": 0},
                "copies": {"type": "integer", "minimum": 1},
                "n_nodes": {"type": "integer", "minimum": 1},
                "n_validation": {"type": "integer", "minimum": 0},
                "n_points": {"type": "integer", "minimum": 1},
            }
        ),
        "memory": _obj(
            {
                "p_i_grid": _GRID,
                "p_n_grid": _GRID,
                "n_samples": {"type": "integer", "minimum": 1},
                "exact": {"type": "boolean"},
                "point": {
                    "oneOf": [
                        {"type": "null"},
                        _obj({"p_i": _PROB, "p_n": _PROB}, ["p_i", "p_n"]),
                    ]
                },
            }
        ),
    },
    ["schema_version", "seed", "code", "noise", "training"],
)


DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "code": "3qc",
    "code_strategy": "standard",
    "self_inverse": True,
    "states": "six",
    "noise": {"kind": "bitflip", "p": 0.1, "eta": 1.0, "p_loss": 0.0, "p_comp": 0.0},
    "training": {
        "epsilon": 0.1,
        "epochs": 200,
        "minibatch_size": 3,
        "beta1": 0.9,
        "beta2": 0.999,
        "nadam_eps": 1e-8,
        "max_restarts": 5,
        "restart_threshold": 0.05,
        "optimizer": "nadam",
        "margin": None,
    },
    "collection": {"max_erasures": 1, "member_threshold": None},
    "study": {"eta_grid": None},
    "validation": {"n_samples": 10_000, "p_grid": None, "internal_p_n": 0.0},
    "discovery": {"n": 4, "sigma": 1.0, "copies": 50, "n_nodes": 21, "n_validation": 2000, "n_points": 100},
    "memory": {
        "p_i_grid": {"start": 0.0, "stop": 0.5, "step": 0.025},
        "p_n_grid": {"start": 0.0, "stop": 0.2, "step": 0.01},
        "n_samples": 10_000,
        "exact": False,
        "point": None,
    },
}

PRESETS: dict[str, dict[str, Any]] = {
    "fig3": {
        "code": "3qc",
        "states": "three",
        "noise": {"kind": "bitflip", "p": 0.1},
        "training": {"epsilon": 0.1, "epochs": 200, "minibatch_size": 3, "margin": 1e-5},
    },
    "fig5a": {
        "code": "5qc",
        "states": "six",
        "noise": {"kind": "depolarizing", "p": 0.1},
        "training": {"epsilon": 0.2, "epochs": 200, "minibatch_size": 2, "margin": 1e-4},
    },
    "fig5b": {
        "code": "5qc",
        "code_strategy": "bitflip",
        "states": "six",
        "noise": {"kind": "bitflip", "p": 0.1},
        "training": {"epsilon": 0.2, "epochs": 200, "minibatch_size": 2, "margin": 1e-4},
    },
    "fig6": {
        "code": "3qc",
        "states": "six",
        "noise": {"kind": "correlated", "p": 0.2, "eta": 1.0},
        "study": {"eta_grid": [1.0, 2.0, 8.0, 16.0]},
        "training": {"epsilon": 0.1, "epochs": 200, "minibatch_size": 3, "margin": 1e-4},
    },
    "fig8": {
        "code": "5qc",
        "states": "six",
        "noise": {"kind": "erasure", "p_loss": 0.4, "p_comp": 0.1},
        "collection": {"max_erasures": 2},
        "training": {"epsilon": 0.1, "epochs": 200, "minibatch_size": 3, "margin": 1e-4},
    },
    "appendixD": {
        "training": {"epsilon": 0.1, "epochs": 150, "minibatch_size": 100, "max_restarts": 10, "restart_threshold": 0.01},
        "discovery": {"n": 4, "sigma": 1.0, "copies": 50, "n_validation": 2000},
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(preset: str | None = None, overrides: dict | None = None, seed: int | None = None) -> dict[str, Any]:
    """Defaults, then the preset, then ``overrides``, then ``seed``; schema-checked."""
    cfg = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = deep_merge(cfg, PRESETS[preset])
    if overrides:
        if not isinstance(overrides, dict):
            raise ConfigError("config must be a JSON object")
        cfg = deep_merge(cfg, overrides)
    if seed is not None:
        cfg["seed"] = seed
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict[str, Any]) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        build_training_config(cfg)
        build_noise(cfg)
        build_code(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_training_config(cfg: dict[str, Any]) -> TrainingConfig:
    t = {k: v for k, v in cfg["training"].items() if k != "margin"}
    return TrainingConfig(seed=cfg["seed"], **t)


def build_noise(cfg: dict[str, Any], **changes) -> NoiseSpec:
    return NoiseSpec(**{**cfg["noise"], **changes})


def build_code(cfg: dict[str, Any]) -> StabilizerCode:
    name, strategy = cfg["code"], cfg.get("code_strategy", "standard")
    if name == "3qc":
        if strategy not in ("standard", "alternative"):
            raise ValueError(f"3qc has no {strategy!r} strategy")
        return three_qubit_code(strategy)
    if name == "5qc":
        if strategy not in ("standard", "bitflip"):
            raise ValueError(f"5qc has no {strategy!r} strategy")
        return five_qubit_code(strategy)
    if strategy != "standard":
        raise ValueError(f"4qec has no {strategy!r} strategy")
    return four_qubit_erasure_code()


def build_grid(spec) -> list[float]:
    """Explicit list, or an inclusive ``start:stop:step`` range rounded to 12 digits."""
    if isinstance(spec, list):
        return [float(x) for x in spec]
    n = int(np.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9)) + 1
    return [round(spec["start"] + k * spec["step"], 12) for k in range(n)]
