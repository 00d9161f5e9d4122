"""
Comparison methods: penalty-method DDP and CBF-QP filtering.

The CBF baseline handles position-level constraints of relative degree two
on plants whose position coordinates are driven as ``p'' = a(x) + b(x) u``
(the double integrator and the cart-pole). With ``h`` depending only on
``p`` the exponential CBF condition

    h'' + alpha_1 h' + alpha_0 h >= 0,
    h'  = grad_h . v,
    h'' = v' hess_h v + grad_h . (a + b u),

is linear in ``u`` and is enforced on the sampled state at every step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FilterInfeasibleError, ModelBlowUpError
from .solver import SolverOptions, solve

DEGENERATE_TOL = 1e-12
FEAS_TOL = 1e-9


def penalty_solve(model, penalty_cost, x0, opts=SolverOptions(), **kwargs):
    """DDP on the plant with the squared-barrier cost; Levenberg regularization on."""
    opts = replace(opts, regularization="levenberg")
    return solve(model, penalty_cost, x0, opts, spec=penalty_cost.spec, **kwargs)


@dataclass
class CBFFilterSpec:
    """Exponential CBF for one position-level safety function.

    ``alpha = (alpha_0, alpha_1)`` multiply ``h`` and ``h'`` respectively.
    ``model`` must provide ``position_index``, ``velocity_index`` and
    ``accel_affine(x) -> (a, b)``.
    """

    constraint: object
    model: object
    alpha: tuple = (4.0, 4.0)
    relative_degree: int = 2

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        if len(self.alpha) != 2 or min(self.alpha) <= 0:
            raise ValueError("alpha must be two positive gains")
        if self.relative_degree != 2:
            raise ValueError("only relative-degree-2 constraints are supported")
        if not hasattr(self.model, "accel_affine"):
            raise ValueError(f"{type(self.model).__name__} has no control-affine acceleration form")


@dataclass
class LinearInequality:
    """Row ``a' u >= b``. ``degenerate`` flags a vanishing control coefficient."""

    a: np.ndarray
    b: float
    degenerate: bool = field(init=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = float(self.b)
        self.degenerate = bool(np.linalg.norm(self.a) < DEGENERATE_TOL)

    def residual(self, u):
        return float(self.a @ u - self.b)


def ecbf_constraint(spec, x):
    """Linear-in-``u`` exponential CBF row at state ``x``."""
    x = np.asarray(x, dtype=float)
    c = spec.constraint
    model = spec.model
    pos = list(model.position_index)
    vel = list(model.velocity_index)
    h = float(c.value(x))
    g = c.grad(x)[pos]
    Hp = c.hess(x)[np.ix_(pos, pos)]
    v = x[vel]
    drift, gain = model.accel_affine(x)
    a0, a1 = spec.alpha
    hdot = g @ v
    b = -(v @ Hp @ v + g @ drift) - a1 * hdot - a0 * h
    return LinearInequality(gain.T @ g, b)


def _project(u_nom, rows):
    """Equality-constrained projection onto ``rows`` (all active)."""
    A = np.array([r.a for r in rows])
    b = np.array([r.b for r in rows])
    G = A @ A.T
    lam = np.linalg.solve(G, b - A @ u_nom)
    return u_nom + A.T @ lam, lam


def cbf_filter_step(u_nom, constraints):
    """Closest control to ``u_nom`` satisfying every ``a' u >= b``.

    One violated row is handled in closed form. Otherwise candidate active
    sets of linearly independent rows are tried in order of size and the
    first that satisfies the KKT conditions is returned; an optimal active
    set of at most ``m`` rows always exists for this projection.
    """
    u_nom = np.asarray(u_nom, dtype=float)
    rows = []
    for r in constraints:
        if r.degenerate:
            if r.b > FEAS_TOL:
                raise FilterInfeasibleError("constraint has no control authority and is violated")
            continue
        rows.append(r)
    violated = [r for r in rows if r.residual(u_nom) < 0]
    if not violated:
        return u_nom.copy()
    if len(rows) == 1:
        r = rows[0]
        return u_nom + (r.b - r.a @ u_nom) / (r.a @ r.a) * r.a

    m = u_nom.size
    for size in range(1, min(m, len(rows)) + 1):
        for subset in itertools.combinations(range(len(rows)), size):
            active = [rows[i] for i in subset]
            A = np.array([r.a for r in active])
            if np.linalg.matrix_rank(A) < size:
                continue
            u, lam = _project(u_nom, active)
            if np.any(lam < -FEAS_TOL):
                continue
            if all(r.residual(u) >= -FEAS_TOL * max(1.0, abs(r.b)) for r in rows):
                return u
    raise FilterInfeasibleError("CBF constraint set is infeasible")


@dataclass
class CBFRolloutResult:
    states: np.ndarray
    controls: np.ndarray
    filter_failed: bool
    min_h: float
    violations: int  # steps with h <= 0 on any constraint
    interventions: int  # steps where the filter changed the control

    @property
    def safe(self):
        return not self.filter_failed and self.violations == 0


def cbf_rollout(model, X_nom, U_nom, policy, specs, x0, horizon=None):
    """Closed-loop rollout of a DDP policy wrapped by the CBF-QP filter.

    The nominal control at step ``t`` is ``U_nom[t] + K[t] (x - X_nom[t])``.
    A filter failure stops the rollout; remaining steps are NaN.
    """
    N = len(U_nom) if horizon is None else int(horizon)
    X = np.full((N + 1, model.n), np.nan)
    U = np.full((N, model.m), np.nan)
    X[0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        failed, interventions = _filtered_steps(model, X, U, X_nom, U_nom, policy, specs, N)
    done = X[~np.isnan(X).any(axis=1)]
    H = np.stack([s.constraint.value(done) for s in specs], axis=-1) if specs else np.full((len(done), 1), np.inf)
    min_h = float(H.min())
    violations = int(np.sum(np.any(H <= 0, axis=1)))
    return CBFRolloutResult(X, U, failed, min_h, violations, interventions)


def _filtered_steps(model, X, U, X_nom, U_nom, policy, specs, N):
    failed = False
    interventions = 0
    for t in range(N):
        x = X[t]
        u_nom = U_nom[t] + policy.K[t] @ (x - X_nom[t])
        rows = [ecbf_constraint(s, x) for s in specs]
        try:
            u = cbf_filter_step(u_nom, rows)
        except FilterInfeasibleError:
            failed = True
            break
        if not np.allclose(u, u_nom, rtol=0, atol=1e-12):
            interventions += 1
        U[t] = u
        try:
            X[t + 1] = model.step(x, u)
        except ModelBlowUpError:
            failed = True
            break
    return failed, interventions
