"""Single trials and Monte-Carlo suites."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..baselines import CBFFilterSpec, cbf_rollout, penalty_solve
from ..cost import PenaltyCost
from ..errors import ConfigError, DBaSError
from ..safety import augment, safety_check
from ..solver import solve
from .config import SOLVERS, load_config
from .environment import EnvironmentSpec, sample_environment
from .problems import build_problem

log = logging.getLogger(__name__)

_POSITION_INDEX = {"point_robot": (0, 1), "diff_drive": (0, 1), "cart_pole": (0,),
                   "quad_reach": (0, 1, 2), "quad_track": (0, 1, 2)}


@dataclass
class TrialResult:
    solver: str
    trial_index: int
    success: bool
    reached: bool
    safe: bool
    cost: float
    mi: int | None
    ci: int | None
    iterations: int
    min_h: float
    min_eig: float | None
    converged: bool
    n_obstacles: int
    wall_time: float
    error: str | None = None
    tracking_error: float | None = None
    max_abs_u: float | None = None
    states: np.ndarray | None = field(default=None, repr=False)
    controls: np.ndarray | None = field(default=None, repr=False)
    barrier: np.ndarray | None = field(default=None, repr=False)
    h_min_trace: np.ndarray | None = field(default=None, repr=False)
    diagnostics: list | None = field(default=None, repr=False)

    def record(self):
        """Scalar fields only (no trajectories, no timing)."""
        d = asdict(self)
        for k in ("states", "controls", "barrier", "h_min_trace", "diagnostics", "wall_time"):
            d.pop(k)
        return d


@dataclass
class TrialConfig:
    """A config dict plus the solver to run on it."""

    config: dict
    solver: str

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")


def environment_spec(cfg):
    return EnvironmentSpec.from_config(cfg, _POSITION_INDEX[cfg["experiment"]])


def problem_for_trial(cfg, trial_index):
    obstacles, start, goal = sample_environment(environment_spec(cfg), trial_index)
    return build_problem(cfg, obstacles, start, goal)


def _task_cost(problem):
    if problem.spec is None:
        return problem.cost
    return PenaltyCost(problem.cost, problem.spec)


def _evaluate(problem, solver, X, U, t0, *, mi=None, ci=None, iterations=0, min_eig=None,
              converged=False, error=None, keep=False, diagnostics=None, extra_fail=False):
    n = problem.model.n
    X = np.asarray(X)[:, :n]
    finished = not np.isnan(X).any()
    if problem.spec is not None:
        safe, min_h, _ = safety_check(problem.spec, X[~np.isnan(X).any(axis=1)])
        H = problem.spec.h_values(X)
        h_trace = H.min(axis=1)
        barrier = np.where(np.all(H > 0, axis=1), np.sum(problem.spec.barrier.value(np.where(H > 0, H, 1.0)), axis=1)
                           - problem.spec.beta_d, np.inf)
    else:
        safe, min_h, h_trace, barrier = True, float("inf"), None, None
    reached = finished and problem.reached(X)
    cost = _task_cost(problem).trajectory_cost(X, U) if finished and safe else float("inf")
    track = None
    if problem.tracking is not None and finished:
        ref = problem.cost.target[:, list(problem.model.position_index)]
        track = float(np.mean(np.linalg.norm(X[:, list(problem.model.position_index)] - ref, axis=1)))
    success = bool(reached and safe and finished and not extra_fail and error is None)
    return TrialResult(
        solver=solver,
        trial_index=-1,
        success=success,
        reached=bool(reached),
        safe=bool(safe and finished),
        cost=float(cost),
        mi=mi,
        ci=ci,
        iterations=int(iterations),
        min_h=float(min_h),
        min_eig=None if min_eig is None or not np.isfinite(min_eig) else float(min_eig),
        converged=bool(converged),
        n_obstacles=len(problem.obstacles),
        wall_time=time.perf_counter() - t0,
        error=error,
        tracking_error=track,
        max_abs_u=float(np.nanmax(np.abs(U))) if np.isfinite(U).any() else None,
        states=X if keep else None,
        controls=np.asarray(U) if keep else None,
        barrier=barrier if keep else None,
        h_min_trace=h_trace if keep else None,
        diagnostics=diagnostics if keep else None,
    )


def solve_problem(problem, solver, keep=False):
    """Run one solver on a built problem and score the outcome."""
    t0 = time.perf_counter()
    N = problem.horizon
    m = problem.model
    if solver == "dbas" and problem.spec is not None:
        model, cost = augment(m, problem.spec), problem.cost
    elif solver == "penalty" and problem.spec is not None:
        model, cost = m, PenaltyCost(problem.cost, problem.spec)
    else:
        model, cost = m, problem.cost
    try:
        if solver == "penalty" and problem.spec is not None:
            res = penalty_solve(model, cost, problem.x0, problem.options, horizon=N,
                                goal_test=problem.goal_test)
        else:
            res = solve(model, cost, problem.x0, problem.options, horizon=N,
                        goal_test=problem.goal_test, spec=problem.spec)
    except DBaSError as exc:
        nan_x = np.full((N + 1, m.n), np.nan)
        nan_x[0] = problem.x0
        return _evaluate(problem, solver, nan_x, np.full((N, m.m), np.nan), t0,
                         error=f"{type(exc).__name__}: {exc}", keep=keep)

    if solver != "cbf" or problem.spec is None:
        return _evaluate(problem, solver, res.states, res.controls, t0, mi=res.mi, ci=res.ci,
                         iterations=res.iterations, min_eig=res.min_eig, converged=res.converged,
                         keep=keep, diagnostics=res.log)

    try:
        specs = [CBFFilterSpec(c, m, problem.cbf_alpha) for c in problem.constraints]
    except ValueError as exc:
        raise ConfigError(f"CBF baseline not available for {problem.model.name}: {exc}") from None
    cr = cbf_rollout(m, res.states, res.controls, res.policy, specs, problem.x0)
    return _evaluate(problem, solver, cr.states, cr.controls, t0, iterations=res.iterations,
                     converged=res.converged, keep=keep, extra_fail=cr.filter_failed,
                     error="filter infeasible" if cr.filter_failed else None)


def run_trial(config, trial_index=0, solver=None, keep=False):
    """Sample trial ``trial_index`` of ``config`` and solve it.

    Solver errors become failed trials; configuration errors propagate.
    """
    cfg = load_config(config)
    solver = solver or cfg.get("solver", "dbas")
    TrialConfig(cfg, solver)
    problem = problem_for_trial(cfg, trial_index)
    result = solve_problem(problem, solver, keep=keep)
    result.trial_index = int(trial_index)
    return result


def _trial_job(args):
    cfg, index, solver = args
    return run_trial(cfg, index, solver)


def run_suite(config, trials, parallelism=1, solver=None, start_index=0):
    """Run ``trials`` independent trials; the result order is the trial order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = load_config(config)
    solver = solver or cfg.get("solver", "dbas")
    jobs = [(cfg, start_index + i, solver) for i in range(trials)]
    if parallelism <= 1:
        return [_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=int(parallelism)) as pool:
        return list(pool.map(_trial_job, jobs))
