"""Experiment configuration: defaults, validation and object construction.

A config file is YAML with an ``experiment`` key, optional ``seed``,
``threads`` and ``out`` keys, and a ``params`` mapping for that experiment.
Every numerical gate lives here with its default.
"""

from __future__ import annotations

import copy
import json
import math
import re
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .torus import CAT, AnosovMap
from .trigpoly import TrigPoly

COMMON = {"map": "cat", "matrix": [list(CAT[0]), list(CAT[1])], "eps": 0.01, "axis": 0, "tau": "cos1"}

DEFAULTS: dict[str, dict[str, Any]] = {
    "spectrum": {"q": 1, "r": 0.02, "K": 16, "grid": None, "nmax": 12, "dK": 4,
                 "k_tol": 1e-6, "tail_tol": 1e-10, "top": 5},
    "traces": {"q": 0, "r": 0.02, "K": 16, "grid": None, "nmax": 6, "tol": 1e-8, "tau": "zero"},
    "pressure": {"n": [12], "sigmas": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
    "ensemble": {"N": "4pi2", "q": 1, "n": 2, "samples": 20000},
    "correlate": {"q": 1, "f": [1, 0], "g": [-1, 0], "N": 8, "direct_N": 8, "r": 0.02, "K": 16, "grid": None,
                  "sweep_samples": 0, "sweep_N": "4pi2", "sweep_q_max": 20, "sweep_K": 6,
                  "sweep_N_max": 24, "bins": 20},
    "average": {"n": [2, 3, 4], "T": [8, 16, 32], "bump_grid": 4001},
    "thresholds": {"n": 12},
}

EXPERIMENTS = tuple(DEFAULTS)
TOP_KEYS = {"experiment", "seed", "threads", "out", "params"}

_PI2 = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*\*?\s*pi\^?2\s*$")


def parse_cutoff(v) -> float:
    """Accept numbers or strings like '4pi2' / '8*pi^2' for multiples of pi^2."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        m = _PI2.match(v)
        if m:
            return float(m.group(1)) * math.pi**2
        try:
            return float(v)
        except ValueError:
            pass
    raise ConfigError(f"cannot parse eigenvalue cutoff {v!r}")


def _check_type(key: str, value, default):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"key '{key}' must be a boolean, got {value!r}")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{key}' must be an integer, got {value!r}")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{key}' must be a number, got {value!r}")
        return float(value)
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"key '{key}' must be a list, got {value!r}")
    return value


def resolve(experiment: str, params: dict | None = None, seed: int = 0, threads: int = 1) -> dict:
    """Full parameter set for ``experiment``: defaults overlaid with
    ``params``; unknown keys are rejected."""
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment '{experiment}'; choose from {', '.join(EXPERIMENTS)}")
    base = copy.deepcopy(COMMON)
    base.update(copy.deepcopy(DEFAULTS[experiment]))
    for k, v in (params or {}).items():
        if k not in base:
            raise ConfigError(f"unknown key '{k}' for experiment '{experiment}'")
        base[k] = _check_type(k, v, base[k])
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"key 'seed' must be an integer, got {seed!r}")
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"key 'threads' must be a positive integer, got {threads!r}")
    base["seed"] = seed
    base["threads"] = threads
    base["experiment"] = experiment
    return base


def load_config(path: str | Path) -> dict:
    """Read and validate a YAML config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {p} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(f"unknown top-level key '{k}'")
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("key 'params' must be a mapping")
    cfg = resolve(raw["experiment"], params, raw.get("seed", 0), raw.get("threads", 1))
    if "out" in raw:
        cfg["out"] = str(raw["out"])
    return cfg


def make_map(cfg: dict) -> AnosovMap:
    name = cfg["map"]
    try:
        if name == "cat":
            return AnosovMap(cfg["matrix"], name="cat" if cfg["matrix"] == COMMON["matrix"] else "linear")
        if name == "shear":
            return AnosovMap.sheared(cfg["matrix"], eps=float(cfg["eps"]), axis=int(cfg["axis"]))
    except ValueError as exc:
        raise ConfigError(f"key 'matrix': {exc}") from exc
    raise ConfigError(f"key 'map' must be 'cat' or 'shear', got {name!r}")


def make_tau(spec) -> TrigPoly:
    """Builtin name ('zero', 'cos1', 'const:<c>'), an inline TrigPoly JSON
    mapping, or a path to a TrigPoly JSON file."""
    if isinstance(spec, dict):
        try:
            return TrigPoly.from_json_obj(spec)
        except ValueError as exc:
            raise ConfigError(f"key 'tau': {exc}") from exc
    if not isinstance(spec, str):
        raise ConfigError(f"key 'tau' must be a name, a mapping or a path, got {spec!r}")
    if spec == "zero":
        return TrigPoly.zero()
    if spec == "cos1":
        return TrigPoly.cos((1, 0), 0.5)
    if spec.startswith("const:"):
        try:
            return TrigPoly.constant(float(spec[6:]))
        except ValueError as exc:
            raise ConfigError(f"key 'tau': bad constant {spec!r}") from exc
    p = Path(spec)
    if p.is_file():
        try:
            return TrigPoly.from_json(p.read_text())
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"key 'tau': {p} is not TrigPoly JSON ({exc})") from exc
    raise ConfigError(f"key 'tau': unknown builtin or missing file {spec!r}")


def to_jsonable(cfg: dict) -> dict:
    """Resolved config with non-JSON values stringified."""
    return json.loads(json.dumps(cfg, sort_keys=True, default=str))
