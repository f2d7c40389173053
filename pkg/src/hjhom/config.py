"""Experiment configuration: JSON schema, validation, and hashing.

The config file is a plain JSON object with blocks

    environment   EnvironmentSpec fields (family, gamma, ...)
    solver        scheme and grid settings
    task          {"kind": <audit|solve|fundamental|lbar|hbar|cell|verify|bounds>, ...}
    seeds         list of rng seeds
    out_dir       output directory

Unknown keys are rejected with their path so typos fail loudly; the sha256
hash of the canonical (sorted-key) serialization is recorded in every output.
"""

from __future__ import annotations

import hashlib
import json

from .environment import EnvironmentSpec

TASK_KINDS = ("audit", "solve", "fundamental", "lbar", "hbar", "cell",
              "verify", "bounds")

_ENV_KEYS = {
    "family": str, "gamma": float, "growth_const": float, "dimension": int,
    "period_or_cell": float, "lipschitz_budget": float, "sigma_shape": list,
    "a0": float, "v0": float, "mod_amp_a": float, "mod_amp_v": float,
    "sigma_mod": float, "cells_per_period": int, "n_modes": int,
    "period_factor": int, "allow_subquadratic": bool,
}

_SOLVER_KEYS = {
    "cfl_safety": float, "num_hamiltonian": str, "dissipation_source": str,
    "max_gradient_cap": float, "dx": float, "extent": float, "boundary": str,
}

_TASK_KEYS = {
    "audit": {"p_max": float, "n_xt": int},
    "solve": {"profile": str, "t_final": float, "epsilon": float,
              "snapshots": int, "slope": float},
    "fundamental": {"vertex": list, "t_final": float, "steepness": float,
                    "epsilon": float, "certify": bool, "n_snapshots": int},
    "lbar": {"v_max": float, "n_v": int, "rho_ladder": list,
             "steepness": float, "certify_first": bool},
    "hbar": {"v_max": float, "n_v": int, "rho_ladder": list, "p_max": float,
             "n_p": int, "steepness": float},
    "cell": {"p_list": list, "eps_list": list, "gradient_cap": float,
             "relax_time": float},
    "verify": {"profile": str, "eps_list": list, "window_radius": float,
               "horizon": float, "v_max": float, "n_v": int,
               "rho_ladder": list, "ratio_bound": float, "slope": float},
    "bounds": {"p_list": list, "max_mode": int, "budget": int, "n_grid": int},
}

_TOP_KEYS = ("environment", "solver", "task", "seeds", "out_dir")


class ConfigError(ValueError):
    """Schema violation, reported with the offending key path."""


def _check_block(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    for key, val in block.items():
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
        want = allowed[key]
        if want is float and isinstance(val, (int, float)) and not isinstance(val, bool):
            continue
        if want is int and isinstance(val, int) and not isinstance(val, bool):
            continue
        if not isinstance(val, want):
            raise ConfigError(f"{path}.{key}: expected {want.__name__}, "
                              f"got {type(val).__name__}")


def validate_config(cfg):
    """Validate the raw config dict; returns it unchanged on success."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    for key in cfg:
        if key not in _TOP_KEYS:
            raise ConfigError(f"{key}: unknown top-level key")
    for key in ("environment", "task"):
        if key not in cfg:
            raise ConfigError(f"{key}: required block missing")
    _check_block(cfg["environment"], _ENV_KEYS, "environment")
    _check_block(cfg.get("solver", {}), _SOLVER_KEYS, "solver")
    task = cfg["task"]
    if not isinstance(task, dict) or "kind" not in task:
        raise ConfigError("task.kind: required")
    kind = task["kind"]
    if kind not in TASK_KINDS:
        raise ConfigError(f"task.kind: unknown kind {kind!r}; choose from {TASK_KINDS}")
    allowed = dict(_TASK_KEYS[kind])
    allowed["kind"] = str
    _check_block(task, allowed, "task")
    seeds = cfg.get("seeds", [0])
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds: expected a list of integers")
    if "out_dir" in cfg and not isinstance(cfg["out_dir"], str):
        raise ConfigError("out_dir: expected a string")
    return cfg


def load_config(path):
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    return validate_config(cfg)


def config_hash(cfg):
    """sha256 of the canonical serialization; identifies a run."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def environment_spec(cfg):
    env = dict(cfg["environment"])
    if "sigma_shape" in env:
        env["sigma_shape"] = tuple(float(s) for s in env["sigma_shape"])
    else:
        env["sigma_shape"] = (0.0,) * int(env.get("dimension", 1))
    return EnvironmentSpec(**env)
