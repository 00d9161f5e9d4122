"""
Quadratic task costs over (possibly augmented) states.

The stage cost uses the unnormalized quadratic form (no factor 1/2)::

    l(x, w, u) = e' Q e + q_w w^2 + (u - u_ref)' R (u - u_ref),  e = x - target_k
    l_f(x, w)  = e' S e + s_w w^2

``target_k`` is a fixed state or a per-step array built from a tracking
reference. When the state passed in has ``n + 1`` entries the last one is
the barrier state ``w``; with ``n`` entries the barrier terms are absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_weight(spec, dim):
    """Turn a scalar, diagonal list or full matrix into a ``dim x dim`` array."""
    W = np.asarray(spec, dtype=float)
    if W.ndim == 0:
        return float(W) * np.eye(dim)
    if W.ndim == 1:
        if W.size != dim:
            raise ValueError(f"diagonal weight has length {W.size}, expected {dim}")
        return np.diag(W)
    if W.shape != (dim, dim):
        raise ValueError(f"weight matrix has shape {W.shape}, expected {(dim, dim)}")
    return W


@dataclass
class QuadExpansion:
    """Cost derivatives at a point (or stacked along a trajectory)."""

    l: np.ndarray
    l_x: np.ndarray
    l_u: np.ndarray
    l_xx: np.ndarray
    l_uu: np.ndarray
    l_ux: np.ndarray


class QuadraticCost:
    """Quadratic stage/terminal cost with an optional barrier-state term.

    Parameters
    ----------
    n, m : plant state and control dimensions.
    Q, R, S : state, control and terminal weights (scalar, diagonal or matrix).
    q_w, s_w : barrier-state stage and terminal weights; ``s_w`` defaults to ``q_w``.
    target : goal state, shape ``(n,)``, or per-step targets ``(N + 1, n)``.
    u_ref : control offset penalized by ``R`` (e.g. hover thrust).
    """

    def __init__(self, n, m, Q=0.0, R=0.005, S=0.0, q_w=0.0, s_w=None, target=None, u_ref=None):
        self.n, self.m = int(n), int(m)
        self.Q = as_weight(Q, self.n)
        self.R = as_weight(R, self.m)
        self.S = as_weight(S, self.n)
        self.q_w = float(q_w)
        self.s_w = self.q_w if s_w is None else float(s_w)
        if self.q_w < 0 or self.s_w < 0:
            raise ValueError("barrier weights must be non-negative")
        if np.min(np.linalg.eigvalsh(self.R)) <= 0:
            raise ValueError("R must be positive definite")
        self.target = np.zeros(self.n) if target is None else np.asarray(target, dtype=float)
        self.u_ref = np.zeros(self.m) if u_ref is None else np.asarray(u_ref, dtype=float)

    # -- targets ----------------------------------------------------------

    def target_at(self, k=None):
        """Target for step ``k``; ``None`` means the final one."""
        if self.target.ndim == 1:
            return self.target
        if k is None:
            return self.target[-1]
        return self.target[min(int(k), len(self.target) - 1)]

    def _targets(self, N):
        if self.target.ndim == 1:
            return self.target
        if len(self.target) < N + 1:
            raise ValueError(f"reference covers {len(self.target) - 1} steps, horizon is {N}")
        return self.target[: N + 1]

    def _split(self, xh):
        xh = np.asarray(xh, dtype=float)
        if xh.shape[-1] == self.n + 1:
            return xh[..., : self.n], xh[..., self.n]
        return xh, None

    # -- values -----------------------------------------------------------

    def stage_cost(self, xh, u, k=0):
        x, w = self._split(xh)
        e = x - self.target_at(k)
        du = np.asarray(u, dtype=float) - self.u_ref
        val = e @ self.Q @ e + du @ self.R @ du
        if w is not None:
            val += self.q_w * w * w
        return float(val)

    def terminal_cost(self, xh, k=None):
        x, w = self._split(xh)
        e = x - self.target_at(k)
        val = e @ self.S @ e
        if w is not None:
            val += self.s_w * w * w
        return float(val)

    def stage_costs(self, X, U):
        """Per-step stage costs for ``X`` of shape ``(N + 1, .)`` and ``U`` ``(N, m)``."""
        N = len(U)
        x, w = self._split(X[:N])
        targets = self._targets(N)
        e = x - (targets[:N] if targets.ndim == 2 else targets)
        du = U - self.u_ref
        val = np.einsum("ki,ij,kj->k", e, self.Q, e) + np.einsum("ki,ij,kj->k", du, self.R, du)
        if w is not None:
            val = val + self.q_w * w * w
        return val

    def trajectory_cost(self, X, U):
        N = len(U)
        return float(np.sum(self.stage_costs(X, U)) + self.terminal_cost(X[N], N))

    # -- derivatives ------------------------------------------------------

    def quad_expand(self, xh, u, k=0):
        x, w = self._split(xh)
        nh = x.shape[-1] + (0 if w is None else 1)
        e = x - self.target_at(k)
        du = np.asarray(u, dtype=float) - self.u_ref
        l_x = np.zeros(nh)
        l_x[: self.n] = 2 * self.Q @ e
        l_xx = np.zeros((nh, nh))
        l_xx[: self.n, : self.n] = 2 * self.Q
        if w is not None:
            l_x[self.n] = 2 * self.q_w * w
            l_xx[self.n, self.n] = 2 * self.q_w
        return QuadExpansion(
            l=np.asarray(self.stage_cost(xh, u, k)),
            l_x=l_x,
            l_u=2 * self.R @ du,
            l_xx=l_xx,
            l_uu=2 * self.R,
            l_ux=np.zeros((self.m, nh)),
        )

    def expand_trajectory(self, X, U):
        """Stacked stage expansions for steps ``0..N-1`` plus the terminal ``(V_x, V_xx)``."""
        N = len(U)
        x, w = self._split(X)
        nh = X.shape[-1]
        targets = self._targets(N)
        e = x - targets
        l_x = np.zeros((N + 1, nh))
        l_x[:, : self.n] = 2 * e @ self.Q.T
        l_xx = np.zeros((nh, nh))
        l_xx[: self.n, : self.n] = 2 * self.Q
        lf_x = np.zeros(nh)
        lf_x[: self.n] = 2 * self.S @ e[N]
        lf_xx = np.zeros((nh, nh))
        lf_xx[: self.n, : self.n] = 2 * self.S
        if w is not None:
            l_x[:, self.n] = 2 * self.q_w * w
            l_xx[self.n, self.n] = 2 * self.q_w
            lf_x[self.n] = 2 * self.s_w * w[N]
            lf_xx[self.n, self.n] = 2 * self.s_w
        l_u = 2 * (U - self.u_ref) @ self.R.T
        stage = QuadExpansion(
            l=self.stage_costs(X, U),
            l_x=l_x[:N],
            l_u=l_u,
            l_xx=np.broadcast_to(l_xx, (N, nh, nh)),
            l_uu=np.broadcast_to(2 * self.R, (N, self.m, self.m)),
            l_ux=np.zeros((N, self.m, nh)),
        )
        return stage, lf_x, lf_xx


class PenaltyCost:
    """Task cost plus a squared-barrier penalty on the plant state.

    Adds ``q_w (beta(x) - beta_d)^2`` per stage and ``s_w (...)^2`` at the
    end, where ``beta`` is the summed barrier of ``spec``. There is no
    barrier state in the dynamics; the penalty reaches the optimizer only
    through its local quadratic model. Unsafe states cost ``+inf``.
    """

    def __init__(self, base, spec, q_w=None, s_w=None):
        self.base = base
        self.spec = spec
        self.q_w = base.q_w if q_w is None else float(q_w)
        self.s_w = base.s_w if s_w is None else float(s_w)
        self.n, self.m = base.n, base.m

    @property
    def u_ref(self):
        return self.base.u_ref

    def _w(self, x):
        h = self.spec.h_values(x)
        if np.any(~(h > 0)):
            return None
        return self.spec.barrier_state(x)

    def stage_cost(self, x, u, k=0):
        x = np.asarray(x, dtype=float)[: self.n]
        w = self._w(x)
        if w is None:
            return np.inf
        return self.base.stage_cost(x, u, k) + self.q_w * float(w) ** 2

    def terminal_cost(self, x, k=None):
        x = np.asarray(x, dtype=float)[: self.n]
        w = self._w(x)
        if w is None:
            return np.inf
        return self.base.terminal_cost(x, k) + self.s_w * float(w) ** 2

    def stage_costs(self, X, U):
        X = np.asarray(X, dtype=float)[:, : self.n]
        N = len(U)
        w = self._w(X[:N])
        if w is None:
            return np.full(N, np.inf)
        return self.base.stage_costs(X, U) + self.q_w * w * w

    def trajectory_cost(self, X, U):
        X = np.asarray(X, dtype=float)[:, : self.n]
        if np.any(~(self.spec.h_values(X) > 0)):
            return np.inf
        N = len(U)
        w = self.spec.barrier_state(X)
        return float(self.base.trajectory_cost(X, U) + self.q_w * np.sum(w[:N] ** 2) + self.s_w * w[N] ** 2)

    def _penalty_derivs(self, X, weight):
        w = self.spec.barrier_state(X)
        g = self.spec.beta_grad(X)
        H = self.spec.beta_hess(X)
        d1 = 2 * weight * w[..., None] * g
        d2 = 2 * weight * (g[..., :, None] * g[..., None, :] + w[..., None, None] * H)
        return d1, d2

    def quad_expand(self, x, u, k=0):
        x = np.asarray(x, dtype=float)[: self.n]
        ex = self.base.quad_expand(x, u, k)
        d1, d2 = self._penalty_derivs(x, self.q_w)
        return QuadExpansion(l=np.asarray(self.stage_cost(x, u, k)), l_x=ex.l_x + d1,
                             l_u=ex.l_u, l_xx=ex.l_xx + d2, l_uu=ex.l_uu, l_ux=ex.l_ux)

    def expand_trajectory(self, X, U):
        X = np.asarray(X, dtype=float)
        N = len(U)
        stage, lf_x, lf_xx = self.base.expand_trajectory(X, U)
        d1, d2 = self._penalty_derivs(X[:N], self.q_w)
        t1, t2 = self._penalty_derivs(X[N], self.s_w)
        stage = QuadExpansion(
            l=self.stage_costs(X, U),
            l_x=stage.l_x + d1,
            l_u=stage.l_u,
            l_xx=stage.l_xx + d2,
            l_uu=stage.l_uu,
            l_ux=stage.l_ux,
        )
        return stage, lf_x + t1, lf_xx + t2


# --------------------------------------------------------------------------
# tracking reference

FIGURE_EIGHT_PERIOD = 25.0


def figure_eight_phase(t):
    """Path parameter ``s(t) = a^2 / (a + 1)`` with ``a = pi t / 25``."""
    a = np.pi * np.asarray(t, dtype=float) / FIGURE_EIGHT_PERIOD
    return a * a / (a + 1.0)


def figure_eight_reference(t):
    """Figure-eight position ``(sin 2s, cos s, 0)`` at time ``t >= 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("reference is defined for t >= 0")
    s = figure_eight_phase(t)
    return np.stack([np.sin(2 * s), np.cos(s), np.zeros_like(s)], axis=-1)


class TrackingReference:
    """Time-parametrized position reference sampled onto a state-target array."""

    def __init__(self, path=figure_eight_reference, position_index=(0, 1, 2)):
        self.path = path
        self.position_index = tuple(position_index)

    def __call__(self, t):
        return self.path(t)

    def state_targets(self, n, N, dt):
        """``(N + 1, n)`` targets: reference positions, zeros elsewhere."""
        T = np.zeros((N + 1, n))
        T[:, list(self.position_index)] = self.path(np.arange(N + 1) * dt)
        return T


def tracking_weight(n, position_index, weight):
    """State weight that penalizes only the tracked position coordinates."""
    Q = np.zeros((n, n))
    idx = list(position_index)
    Q[np.ix_(idx, idx)] = as_weight(weight, len(idx))
    return Q
