"""
DDP / iLQR over any :class:`~dbas_ddp.dynamics.DynamicsModel`.

The backward pass expands the Bellman recursion around a nominal trajectory::

    H_x  = l_x + f_x' V_x'            H_u  = l_u + f_u' V_x'
    H_xx = l_xx + f_x' V_xx' f_x      H_uu = l_uu + f_u' V_xx' f_u
    H_ux = l_ux + f_u' V_xx' f_x

(plus ``V_x' . f_..`` tensor terms when ``second_order`` is set), and returns
``k = -H_uu^-1 H_u``, ``K = -H_uu^-1 H_ux``. The forward pass rolls the true
dynamics out under ``u = u_bar + eps k + K (x - x_bar)``; any rollout that
leaves the safe set costs ``+inf`` and is rejected by the line search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BackwardPassError, ModelBlowUpError, UnsafeInitialError, UnsafeStateError
from .safety import AugmentedModel, safety_check

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    tol: float = 1e-3
    eps0: float = 1.0
    eps_factor: float = 0.5
    min_eps: float = 2.0**-20
    regularization: str = "none"  # or "levenberg"
    mu0: float = 1e-6
    mu_min: float = 1e-6
    mu_max: float = 1e10
    mu_up: float = 10.0
    mu_down: float = 0.5
    second_order: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not (0 < self.eps_factor < 1 and 0 < self.min_eps <= self.eps0 <= 1):
            raise ValueError("line-search schedule must be strictly decreasing within (0, 1]")
        if self.regularization not in ("none", "levenberg"):
            raise ValueError(f"unknown regularization {self.regularization!r}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")

    def eps_schedule(self):
        eps, out = self.eps0, []
        while eps >= self.min_eps * (1 - 1e-12):
            out.append(eps)
            eps *= self.eps_factor
        return out


@dataclass
class Policy:
    """Feedforward ``k`` of shape ``(N, m)`` and feedback ``K`` of shape ``(N, m, n)``."""

    k: np.ndarray
    K: np.ndarray

    def __len__(self):
        return len(self.k)

    @classmethod
    def zeros(cls, N, n, m):
        return cls(np.zeros((N, m)), np.zeros((N, m, n)))


@dataclass
class BackwardResult:
    policy: Policy
    dV: tuple  # (sum k'H_u, sum 1/2 k'H_uu k)
    min_eig: float
    huu_eigs: np.ndarray  # min eigenvalue of the unregularized H_uu per step

    def expected_reduction(self, eps=1.0):
        return -(eps * self.dV[0] + eps * eps * self.dV[1])


@dataclass
class SolveResult:
    states: np.ndarray
    controls: np.ndarray
    policy: Policy
    cost_history: list
    iterations: int
    mi: int | None
    ci: int | None
    min_eig_history: list
    converged: bool
    stop_reason: str
    safe: bool | None = None
    min_h: float | None = None
    log: list = field(default_factory=list)

    @property
    def cost(self):
        return self.cost_history[-1]

    @property
    def min_eig(self):
        return min(self.min_eig_history) if self.min_eig_history else float("nan")


def min_eig_symmetric(M):
    """Smallest eigenvalue of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    return float(np.linalg.eigvalsh(M)[0])


def _dynamics_second_order(model, x, u, h=1e-5):
    """Second derivatives of the step map by central differences of its Jacobians.

    Returns ``(f_xx, f_uu, f_ux)`` with shapes ``(n, n, n)``, ``(n, m, m)``
    and ``(n, m, n)``; the first index is the output coordinate.
    """
    n, m = x.size, u.size
    fxx = np.empty((n, n, n))
    fux = np.empty((n, m, n))
    fuu = np.empty((n, m, m))
    for j in range(n):
        d = np.zeros(n)
        d[j] = h
        Ap, Bp = model.jac(x + d, u)
        Am, Bm = model.jac(x - d, u)
        fxx[:, :, j] = (Ap - Am) / (2 * h)
        fux[:, :, j] = (Bp - Bm) / (2 * h)
    for j in range(m):
        d = np.zeros(m)
        d[j] = h
        _, Bp = model.jac(x, u + d)
        _, Bm = model.jac(x, u - d)
        fuu[:, :, j] = (Bp - Bm) / (2 * h)
    return fxx, fuu, fux


def backward_pass(model, cost, X, U, opts=SolverOptions(), mu=0.0):
    """Riccati sweep from the terminal cost back to step 0.

    ``mu`` is added to the diagonal of ``H_uu`` before factorization. The
    eigenvalues recorded in the result are those of the unregularized
    ``H_uu``. Raises :class:`BackwardPassError` if the (regularized)
    ``H_uu`` is not positive definite at some step.
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    N, m = U.shape
    n = X.shape[1]
    fx, fu = model.jac(X[:N], U)
    stage, Vx, Vxx = cost.expand_trajectory(X, U)

    k_ff = np.zeros((N, m))
    K_fb = np.zeros((N, m, n))
    Huu_all = np.empty((N, m, m))
    dV1 = dV2 = 0.0
    eye_m = np.eye(m)

    for t in range(N - 1, -1, -1):
        A, B = fx[t], fu[t]
        VxxA = Vxx @ A
        VxxB = Vxx @ B
        Hx = stage.l_x[t] + A.T @ Vx
        Hu = stage.l_u[t] + B.T @ Vx
        Hxx = stage.l_xx[t] + A.T @ VxxA
        Huu = stage.l_uu[t] + B.T @ VxxB
        Hux = stage.l_ux[t] + B.T @ VxxA
        if opts.second_order:
            fxx, fuu, fux = _dynamics_second_order(model, X[t], U[t])
            Hxx = Hxx + np.tensordot(Vx, fxx, axes=1)
            Huu = Huu + np.tensordot(Vx, fuu, axes=1)
            Hux = Hux + np.tensordot(Vx, fux, axes=1)
        Huu = 0.5 * (Huu + Huu.T)
        Huu_all[t] = Huu
        Hreg = Huu + mu * eye_m if mu else Huu
        try:
            L = np.linalg.cholesky(Hreg)
        except np.linalg.LinAlgError:
            raise BackwardPassError(t, min_eig_symmetric(Huu)) from None
        rhs = np.column_stack([Hu, Hux])
        sol = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        k = -sol[:, 0]
        K = -sol[:, 1:]
        k_ff[t] = k
        K_fb[t] = K
        dV1 += k @ Hu
        dV2 += 0.5 * k @ Hreg @ k
        Vx = Hx + K.T @ Hreg @ k + K.T @ Hu + Hux.T @ k
        Vxx = Hxx + K.T @ Hreg @ K + K.T @ Hux + Hux.T @ K
        Vxx = 0.5 * (Vxx + Vxx.T)

    eigs = np.linalg.eigvalsh(Huu_all)[:, 0]
    return BackwardResult(Policy(k_ff, K_fb), (float(dV1), float(dV2)), float(eigs.min()), eigs)


def rollout(model, x0, U):
    """Open-loop rollout; raises on unsafe or non-finite states."""
    U = np.asarray(U, dtype=float)
    X = np.empty((len(U) + 1, model.n))
    X[0] = x0
    for t in range(len(U)):
        X[t + 1] = model.step(X[t], U[t])
    return X


def forward_pass(model, cost, X, U, policy, eps):
    """Closed-loop rollout of ``u = u_bar + eps k + K (x - x_bar)``.

    Returns ``(X_new, U_new, J)``. ``J`` is ``+inf`` if the rollout leaves the
    safe set or blows up; the returned arrays are then only partially filled.
    """
    N = len(U)
    Xn = np.full_like(X, np.nan)
    Un = np.full_like(U, np.nan)
    Xn[0] = X[0]
    k, K = policy.k, policy.K
    try:
        for t in range(N):
            u = U[t] + eps * k[t] + K[t] @ (Xn[t] - X[t])
            Un[t] = u
            Xn[t + 1] = model.step(Xn[t], u)
    except (UnsafeStateError, ModelBlowUpError):
        return Xn, Un, np.inf
    J = cost.trajectory_cost(Xn, Un)
    if not np.isfinite(J):
        J = np.inf
    return Xn, Un, J


def line_search(model, cost, X, U, J, policy, opts=SolverOptions()):
    """First ``eps`` in the schedule whose rollout strictly decreases the cost.

    Returns ``(X_new, U_new, J_new, eps)`` or ``None`` if every ``eps`` fails.
    """
    for eps in opts.eps_schedule():
        Xn, Un, Jn = forward_pass(model, cost, X, U, policy, eps)
        if Jn < J:
            return Xn, Un, Jn, eps
    return None


def _spec_of(model, cost, spec):
    if spec is not None:
        return spec
    if isinstance(model, AugmentedModel):
        return model.spec
    return getattr(cost, "spec", None)


def solve(model, cost, x0, opts=SolverOptions(), U0=None, horizon=None, goal_test=None, spec=None):
    """Iterate backward and forward passes until the cost stops improving.

    Parameters
    ----------
    x0 : plant state; augmented automatically for an :class:`AugmentedModel`.
    U0 : initial controls, ``(N, m)``. If omitted, the cost's ``u_ref``
        (the steady-state input) is repeated ``horizon`` times.
    goal_test : ``goal_test(X) -> bool``; the first iteration for which it
        holds is reported as ``mi``.

    Convergence is declared when an accepted iteration changes the cost by
    less than ``opts.tol`` (that iteration is ``ci``), when the backward pass
    predicts less than ``opts.tol`` improvement, or when the line search
    cannot find a decrease (the last accepted iteration is ``ci``).
    """
    x0 = np.asarray(x0, dtype=float)
    if isinstance(model, AugmentedModel) and x0.size == model.base.n:
        try:
            x0 = model.initial_state(x0)
        except UnsafeStateError as exc:
            raise UnsafeInitialError(f"initial state is not strictly safe ({exc})") from None
    if U0 is None:
        if horizon is None:
            raise ValueError("pass either U0 or horizon")
        U0 = np.tile(cost.u_ref, (int(horizon), 1))
    U = np.array(U0, dtype=float)
    spec = _spec_of(model, cost, spec)

    try:
        X = rollout(model, x0, U)
    except UnsafeStateError as exc:
        raise UnsafeInitialError(f"initial nominal rollout is unsafe ({exc})") from None
    J = cost.trajectory_cost(X, U)
    if not np.isfinite(J):
        raise UnsafeInitialError("initial nominal trajectory has infinite cost")

    history = [J]
    eig_history = []
    diag = []
    mi = 0 if goal_test is not None and goal_test(X) else None
    ci = None
    it = 0
    converged = False
    reason = "max_iterations"
    levenberg = opts.regularization == "levenberg"
    mu = opts.mu0 if levenberg else 0.0
    policy = Policy.zeros(len(U), model.n, model.m)

    while it < opts.max_iterations:
        try:
            bp = backward_pass(model, cost, X, U, opts, mu)
        except BackwardPassError as exc:
            eig_history.append(exc.min_eig)
            if not levenberg:
                raise
            mu = max(mu * opts.mu_up, opts.mu0)
            if mu > opts.mu_max:
                reason = "regularization_exhausted"
                break
            continue
        eig_history.append(bp.min_eig)
        policy = bp.policy
        if bp.expected_reduction() < opts.tol:
            converged, reason = True, "expected_reduction"
            ci = it
            diag.append(dict(iteration=it, cost=J, eps=0.0, min_eig=bp.min_eig, mu=mu, accepted=False))
            break
        found = line_search(model, cost, X, U, J, policy, opts)
        if found is None:
            diag.append(dict(iteration=it, cost=J, eps=0.0, min_eig=bp.min_eig, mu=mu, accepted=False))
            converged, reason = True, "line_search_stall"
            ci = it
            break
        X, U, J_new, eps = found
        it += 1
        dJ = J - J_new
        J = J_new
        history.append(J)
        diag.append(dict(iteration=it, cost=J, eps=eps, min_eig=bp.min_eig, mu=mu, accepted=True))
        log.debug("iter %d cost %.6g eps %.3g min_eig %.3g", it, J, eps, bp.min_eig)
        if mi is None and goal_test is not None and goal_test(X):
            mi = it
        if levenberg:
            mu = max(mu * opts.mu_down, opts.mu_min)
        if dJ < opts.tol:
            converged, reason = True, "cost_change"
            ci = it
            break

    safe = min_h = None
    if spec is not None:
        safe, min_h, _ = safety_check(spec, X)
    return SolveResult(
        states=X,
        controls=U,
        policy=policy,
        cost_history=history,
        iterations=it,
        mi=mi,
        ci=ci,
        min_eig_history=eig_history,
        converged=converged,
        stop_reason=reason,
        safe=safe,
        min_h=min_h,
        log=diag,
    )


def with_options(opts, **changes):
    return replace(opts, **changes)
