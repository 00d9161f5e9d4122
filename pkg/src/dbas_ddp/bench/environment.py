"""Seeded random environments: obstacle courses and perturbed start/goal states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


def trial_rng(seed, trial_index):
    """Generator for one trial; independent of the order trials run in."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial_index)]))


@dataclass
class EnvironmentSpec:
    """Randomization protocol for one experiment.

    ``placement`` is one of::

        {"kind": "box", "corners": [c0, c1, c2, c3]}   # parallelogram, corners in order
        {"kind": "normal", "mean": [...], "std": s}
        {"kind": "uniform", "low": [...], "high": [...]}

    ``start_box`` / ``goal_box`` give per-coordinate half-widths of a uniform
    perturbation around the nominal start and goal states.
    """

    kind: str
    start: np.ndarray
    goal: np.ndarray | None
    position_index: tuple
    obstacle_count: tuple | None = None
    placement: dict | None = None
    radius: tuple = (0.1, 0.5)
    start_box: np.ndarray | None = None
    goal_box: np.ndarray | None = None
    clearance: float = 0.2
    max_resample: int = 10_000
    seed: int = 0
    fixed_obstacles: list = field(default_factory=list)

    @classmethod
    def from_config(cls, cfg, position_index):
        env = cfg.get("environment") or {}
        start = np.asarray(cfg["start"], dtype=float)
        goal = None if cfg.get("goal") is None else np.asarray(cfg["goal"], dtype=float)

        def _box(key, ref):
            if key not in env:
                return None
            hw = np.asarray(env[key], dtype=float)
            if ref is None or hw.shape != ref.shape:
                raise ConfigError(f"{key} must have one half-width per state coordinate")
            return hw

        count = env.get("obstacle_count")
        return cls(
            kind=cfg["experiment"],
            start=start,
            goal=goal,
            position_index=tuple(position_index),
            obstacle_count=None if count is None else (int(count[0]), int(count[1])),
            placement=env.get("placement"),
            radius=tuple(env.get("radius", (0.1, 0.5))),
            start_box=_box("start_box", start),
            goal_box=_box("goal_box", goal),
            clearance=float(env.get("clearance", 0.2)),
            max_resample=int(env.get("max_resample", 10_000)),
            seed=int(cfg.get("seed", 0)),
            fixed_obstacles=list(cfg.get("obstacles", [])),
        )

    @property
    def randomized(self):
        return self.obstacle_count is not None or self.start_box is not None or self.goal_box is not None

    def _center(self, rng):
        p = self.placement or {}
        kind = p.get("kind")
        if kind == "box":
            c = np.asarray(p["corners"], dtype=float)
            s, t = rng.uniform(size=2)
            return c[0] + s * (c[1] - c[0]) + t * (c[3] - c[0])
        if kind == "normal":
            mean = np.asarray(p["mean"], dtype=float)
            return mean + float(p.get("std", 1.0)) * rng.standard_normal(mean.size)
        if kind == "uniform":
            return rng.uniform(np.asarray(p["low"], float), np.asarray(p["high"], float))
        raise ConfigError(f"unknown obstacle placement {kind!r}")


def sample_environment(spec, trial_index):
    """Return ``(obstacles, start, goal)`` for one trial.

    Obstacles are dicts in the config format (fixed ones first). A sampled
    sphere is redrawn until its surface is at least ``clearance`` away from
    both the start and goal positions. Deterministic in
    ``(spec.seed, trial_index)``.
    """
    rng = trial_rng(spec.seed, trial_index)
    start = spec.start.copy()
    goal = None if spec.goal is None else spec.goal.copy()
    if spec.start_box is not None:
        start = start + rng.uniform(-1, 1, size=start.size) * spec.start_box
    if spec.goal_box is not None:
        goal = goal + rng.uniform(-1, 1, size=goal.size) * spec.goal_box

    idx = list(spec.position_index)
    anchors = [start[idx]] + ([goal[idx]] if goal is not None else [])
    obstacles = [dict(o) for o in spec.fixed_obstacles]
    if spec.obstacle_count is not None:
        lo, hi = spec.obstacle_count
        count = int(rng.integers(lo, hi + 1))
        for _ in range(count):
            for _attempt in range(spec.max_resample):
                center = spec._center(rng)
                radius = float(rng.uniform(*spec.radius))
                if radius <= 0:
                    continue
                dim = len(center)
                if all(np.linalg.norm(center - a[:dim]) >= radius + spec.clearance for a in anchors):
                    break
            else:
                raise ConfigError("could not place an obstacle clear of start and goal; check the environment spec")
            obstacles.append({"type": "sphere", "center": center.tolist(), "radius": radius})
    return obstacles, start, goal
