"""Turn a configuration plus a sampled environment into solver inputs."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..cost import QuadraticCost, TrackingReference, figure_eight_reference, tracking_weight
from ..dynamics import make_model
from ..errors import ConfigError
from ..safety import CoordinateBound, DBaSSpec, ShapeConstraint, SphericalObstacle
from ..solver import SolverOptions

MODEL_OF = {
    "point_robot": "point_robot",
    "diff_drive": "diff_drive",
    "cart_pole": "cart_pole",
    "quad_reach": "quadrotor",
    "quad_track": "quadrotor",
}

REFERENCES = {"figure_eight": figure_eight_reference}


@dataclass
class Problem:
    """Everything one solve needs."""

    model: object
    constraints: list
    obstacles: list  # config-format dicts, kept for export and plotting
    spec: DBaSSpec | None
    cost: QuadraticCost
    x0: np.ndarray
    goal: np.ndarray | None
    horizon: int
    options: SolverOptions
    goal_index: tuple
    threshold: float
    cbf_alpha: tuple
    tracking: TrackingReference | None = None

    def reached(self, X):
        """Whether the final state is within the success threshold of the goal."""
        if self.goal is None:
            return True
        idx = list(self.goal_index)
        return bool(np.linalg.norm(X[-1, idx] - self.goal[idx]) <= self.threshold)

    def goal_test(self, X):
        return self.reached(X[:, : self.model.n])


def make_constraint(ob, position_index):
    kind = ob["type"]
    try:
        if kind == "sphere":
            center = ob["center"]
            return SphericalObstacle(center, ob["radius"], index=position_index[: len(center)])
        if kind == "bound":
            return CoordinateBound(ob["index"], ob["limit"])
        if kind in ShapeConstraint.KINDS:
            params = {k: ob[k] for k in ("ax", "ay", "r", "a", "eps") if k in ob}
            return ShapeConstraint(kind, center=ob.get("center", (0.0, 0.0)),
                                   index=position_index[:2], **params)
    except KeyError as exc:
        raise ConfigError(f"obstacle {ob} is missing {exc}") from None
    raise ConfigError(f"unknown obstacle type {kind!r}")


def solver_options(cfg):
    opts = dict(cfg.get("options", {}))
    valid = {f.name for f in fields(SolverOptions)}
    unknown = set(opts) - valid
    if unknown:
        raise ConfigError(f"unknown solver options {sorted(unknown)}")
    try:
        return SolverOptions(**opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver options: {exc}") from None


def build_problem(cfg, obstacles, start, goal):
    kind = cfg["experiment"]
    dt = float(cfg.get("dt", 0.02))
    N = int(cfg["horizon"])
    try:
        model = make_model(MODEL_OF[kind], dt=dt, **cfg.get("model", {}))
    except TypeError as exc:
        raise ConfigError(f"bad model parameters: {exc}") from None
    n, m = model.n, model.m
    x0 = np.asarray(start, dtype=float)
    if x0.size != n:
        raise ConfigError(f"start has {x0.size} entries, model state has {n}")
    if goal is not None:
        goal = np.asarray(goal, dtype=float)
        if goal.size != n:
            raise ConfigError(f"goal has {goal.size} entries, model state has {n}")

    pos = tuple(model.position_index)
    constraints = [make_constraint(ob, pos) for ob in obstacles]

    c = cfg.get("cost", {})
    u_ref = c.get("u_ref")
    if u_ref == "hover":
        u_ref = model.hover_control
    tracking = None
    Q, S, target = c.get("Q", 0.0), c.get("S", 0.0), goal
    tr = cfg.get("tracking")
    if tr is not None:
        path = REFERENCES.get(tr.get("reference", "figure_eight"))
        if path is None:
            raise ConfigError(f"unknown tracking reference {tr.get('reference')!r}")
        tracking = TrackingReference(path, pos)
        target = tracking.state_targets(n, N, dt)
        Q = tracking_weight(n, pos, tr.get("position_weight", 1.0))
        S = tracking_weight(n, pos, tr.get("terminal_weight", tr.get("position_weight", 1.0)))
    try:
        cost = QuadraticCost(n, m, Q=Q, R=c.get("R", 0.005), S=S, q_w=c.get("q_w", 1e-3),
                             s_w=c.get("s_w"), target=target, u_ref=u_ref)
    except ValueError as exc:
        raise ConfigError(f"bad cost weights: {exc}") from None

    spec = None
    if constraints:
        shift = bool(cfg.get("shift", tracking is None))
        desired = goal if tracking is None else None
        try:
            spec = DBaSSpec(constraints, cfg.get("barrier", "inverse"), desired=desired, shift=shift)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    success = cfg.get("success", {})
    goal_index = tuple(success.get("indices", pos))
    cbf = cfg.get("cbf", {})
    return Problem(
        model=model,
        constraints=constraints,
        obstacles=list(obstacles),
        spec=spec,
        cost=cost,
        x0=x0,
        goal=None if tracking is not None else goal,
        horizon=N,
        options=solver_options(cfg),
        goal_index=goal_index,
        threshold=float(success.get("threshold", 0.1)),
        cbf_alpha=tuple(cbf.get("alpha", (4.0, 4.0))),
        tracking=tracking,
    )
