"""Experiment configuration files (JSON)."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

from ..errors import ConfigError

EXPERIMENTS = ("point_robot", "diff_drive", "cart_pole", "quad_reach", "quad_track")
SOLVERS = ("dbas", "penalty", "cbf", "unconstrained")

_REQUIRED = ("experiment", "horizon", "start")


def builtin_configs():
    """Names of the configuration files shipped with the package."""
    root = resources.files("dbas_ddp") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(source):
    """Load a config from a path, a builtin name, or pass a dict through.

    The result is validated and is a fresh dict the caller may mutate.
    """
    if isinstance(source, dict):
        cfg = copy.deepcopy(source)
    else:
        path = Path(source)
        if path.is_file():
            text = path.read_text()
        else:
            name = path.name[:-5] if path.name.endswith(".json") else path.name
            res = resources.files("dbas_ddp") / "configs" / f"{name}.json"
            if not res.is_file():
                raise ConfigError(f"no config file {source!r} and no builtin named {name!r}")
            text = res.read_text()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON ({exc})") from None
    validate(cfg)
    return cfg


def validate(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in _REQUIRED:
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}; choose from {EXPERIMENTS}")
    if not isinstance(cfg["horizon"], int) or cfg["horizon"] < 1:
        raise ConfigError("horizon must be a positive integer")
    if cfg.get("dt", 0.02) <= 0:
        raise ConfigError("dt must be positive")
    solver = cfg.get("solver", "dbas")
    if solver not in SOLVERS:
        raise ConfigError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    success = cfg.get("success", {})
    if "threshold" in success and not success["threshold"] > 0:
        raise ConfigError("success threshold must be positive")
    for ob in cfg.get("obstacles", []):
        if "type" not in ob:
            raise ConfigError(f"obstacle entry without 'type': {ob}")
    env = cfg.get("environment")
    if env is not None and "obstacle_count" in env:
        lo, hi = env["obstacle_count"]
        if not 0 <= lo <= hi:
            raise ConfigError("obstacle_count must be [low, high] with 0 <= low <= high")
    return cfg
