"""Versioned experiment configuration.

A config is one JSON document.  Unknown keys anywhere in the tree are
rejected with their dotted path, so a typo cannot silently fall back to a
default and break reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError

__all__ = ["CONFIG_VERSION", "ExperimentConfig", "load_config", "parse_config"]

CONFIG_VERSION = 1

# allowed keys per nested section; None marks scalar leaves
_SCHEMA = {
    "version": None,
    "model": {"kind": None, "sites": None, "dim": None, "seed": None, "gamma": None,
              "path": None, "detect_site": None},
    "initial": {"kind": None, "index": None, "epsilon": None, "site": None,
                "real": None, "imag": None},
    "tau": None,
    "frameworks": None,
    "n_max": None,
    "m_max": None,
    "out_dir": None,
    "t_grid": {"stop": None, "count": None},
    "epsilon": None,
    "modes": None,
    "xi": None,
    "grid": {"x_min": None, "x_max": None, "y_min": None, "y_max": None,
             "nx": None, "ny": None},
    "tolerances": {"merge_tol": None, "drop_tol": None, "quad_tol": None,
                   "tail_tol": None},
}

_FRAMEWORKS = ("strobo", "nhh", "zeno", "corrected")
_PERTURB_MODES = ("uniform", "naive", "state", "shifted")


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    initial: dict
    tau: tuple
    frameworks: tuple = ("strobo", "nhh")
    n_max: int = 4000
    m_max: int = 2
    out_dir: str = "out"
    t_grid: dict = field(default_factory=lambda: {"stop": 10.0, "count": 400})
    epsilon: tuple = (0.25, 0.5, 0.75)
    modes: tuple = ("uniform", "naive")
    xi: tuple = (0, 1)
    grid: dict | None = None
    tolerances: dict = field(default_factory=dict)


def _check_keys(tree, schema, path: str) -> None:
    if not isinstance(tree, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    for key, val in tree.items():
        if key not in schema:
            loc = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key {loc!r}")
        sub = schema[key]
        if isinstance(sub, dict) and isinstance(val, dict):
            _check_keys(val, sub, f"{path}.{key}" if path else key)


def _floats(raw, path: str, positive: bool = False) -> tuple:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(f"{path}: need a non-empty list of numbers")
    try:
        vals = tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: need a non-empty list of numbers") from None
    if positive and any(v <= 0 for v in vals):
        raise ConfigError(f"{path}: values must be positive")
    if any(not np.isfinite(v) for v in vals):
        raise ConfigError(f"{path}: values must be finite")
    return vals


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, _SCHEMA, "")
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"version: expected {CONFIG_VERSION}, got {version!r}"
        )

    model = dict(doc.get("model") or {})
    kind = model.get("kind")
    if kind not in ("ring", "gue", "line", "file"):
        raise ConfigError("model.kind: need one of ring, gue, line, file")
    if kind == "ring" and int(model.get("sites", 0)) < 2:
        raise ConfigError("model.sites: ring needs at least 2 sites")
    if kind == "gue":
        if int(model.get("dim", 0)) < 2:
            raise ConfigError("model.dim: need dim >= 2")
        if "seed" in model and int(model["seed"]) < 0:
            raise ConfigError("model.seed: must be nonnegative")
    if kind == "file" and not model.get("path"):
        raise ConfigError("model.path: required for file models")

    initial = dict(doc.get("initial") or {"kind": "site", "index": 0})
    ikind = initial.get("kind", "site")
    if ikind not in ("site", "uniform", "vector", "perturbed"):
        raise ConfigError("initial.kind: need site, uniform, vector, or perturbed")
    if ikind == "perturbed":
        eps = float(initial.get("epsilon", -1.0))
        if not 0.0 <= eps <= 1.0:
            raise ConfigError("initial.epsilon: must lie in [0, 1]")
    if ikind == "vector" and not initial.get("real"):
        raise ConfigError("initial.real: vector initial state needs components")
    initial.setdefault("kind", ikind)

    tau = _floats(doc.get("tau", []), "tau", positive=True)

    fw_raw = doc.get("frameworks", ["strobo", "nhh"])
    if not isinstance(fw_raw, (list, tuple)) or not fw_raw:
        raise ConfigError("frameworks: need a non-empty list")
    for f in fw_raw:
        if f not in _FRAMEWORKS:
            raise ConfigError(f"frameworks: unknown framework {f!r}")

    modes = tuple(doc.get("modes", ["uniform", "naive"]))
    for m in modes:
        if m not in _PERTURB_MODES:
            raise ConfigError(f"modes: unknown mode {m!r}")

    eps_list = tuple(float(e) for e in doc.get("epsilon", (0.25, 0.5, 0.75)))
    if any(not 0.0 <= e <= 1.0 for e in eps_list):
        raise ConfigError("epsilon: values must lie in [0, 1]")

    xi = tuple(int(v) for v in doc.get("xi", (0, 1)))
    if any(v < 0 for v in xi):
        raise ConfigError("xi: separations must be nonnegative")

    n_max = int(doc.get("n_max", 4000))
    m_max = int(doc.get("m_max", 2))
    if n_max < 1 or m_max < 1:
        raise ConfigError("n_max/m_max: must be positive")

    t_grid = {"stop": 10.0, "count": 400}
    t_grid.update(doc.get("t_grid") or {})
    if t_grid["stop"] <= 0 or int(t_grid["count"]) < 2:
        raise ConfigError("t_grid: need stop > 0 and count >= 2")

    grid = doc.get("grid")
    if grid is not None:
        grid = dict(grid)
        for k in ("nx", "ny"):
            if int(grid.get(k, 0)) < 2:
                raise ConfigError(f"grid.{k}: need at least 2 nodes")

    return ExperimentConfig(
        model=model,
        initial=initial,
        tau=tau,
        frameworks=tuple(fw_raw),
        n_max=n_max,
        m_max=m_max,
        out_dir=str(doc.get("out_dir", "out")),
        t_grid={"stop": float(t_grid["stop"]), "count": int(t_grid["count"])},
        epsilon=eps_list,
        modes=modes,
        xi=xi,
        grid=grid,
        tolerances=dict(doc.get("tolerances") or {}),
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(doc)
