"""
Safety functions, barrier functions and discrete barrier states (DBaS).

A safety function ``h`` defines the safe set ``{x : h(x) > 0}``. A barrier
``B`` maps ``h > 0`` to a value that blows up as ``h -> 0+``. Summing
``B(h_i(x))`` over all constraints and subtracting the value at the desired
state gives the barrier state

    w_{k+1} = sum_i B(h_i(f(x_k, u_k))) - beta_d

which :class:`AugmentedModel` appends to a plant so the optimizer sees safety
as boundedness of a state.

Safety functions evaluate on the last axis and broadcast over leading ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsModel
from .errors import UnsafeStateError

SMOOTH_ABS_EPS = 1e-3


# --------------------------------------------------------------------------
# barrier functions


class BarrierFunction:
    """Scalar barrier ``B(h)`` with first and second derivatives.

    ``kind`` is one of ``inverse`` (1/h), ``log`` (-log h) or
    ``shifted-log`` (-log(h / (1 + h))).
    """

    KINDS = ("inverse", "log", "shifted-log")

    def __init__(self, kind="inverse"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown barrier kind {kind!r}; choose from {self.KINDS}")
        self.kind = kind

    def __repr__(self):
        return f"BarrierFunction({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, BarrierFunction) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    @staticmethod
    def _check(h):
        h = np.asarray(h, dtype=float)
        if np.any(~(h > 0)):
            raise UnsafeStateError(float(np.min(h)) if h.size else h)
        return h

    def __call__(self, h):
        return self.value(h)

    def value(self, h):
        h = self._check(h)
        if self.kind == "inverse":
            return 1.0 / h
        if self.kind == "log":
            return -np.log(h)
        return np.log1p(h) - np.log(h)

    def d1(self, h):
        h = self._check(h)
        if self.kind == "inverse":
            return -1.0 / h**2
        if self.kind == "log":
            return -1.0 / h
        return 1.0 / (1.0 + h) - 1.0 / h

    def d2(self, h):
        h = self._check(h)
        if self.kind == "inverse":
            return 2.0 / h**3
        if self.kind == "log":
            return 1.0 / h**2
        return 1.0 / h**2 - 1.0 / (1.0 + h) ** 2


def barrier_eval(barrier, h):
    """``B(h)`` for ``h > 0``; raises :class:`UnsafeStateError` otherwise."""
    return barrier.value(h)


# --------------------------------------------------------------------------
# safety functions


class SafetyFunction:
    """Smooth scalar constraint; safe where ``value(x) > 0``."""

    tag = "constraint"

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


def eval_h(constraint, x):
    return constraint.value(np.asarray(x, dtype=float))


class _PlanarShape(SafetyFunction):
    """Helper for constraints that depend on a few position coordinates.

    Subclasses implement ``_local(P)`` returning value, gradient and Hessian
    with respect to the selected coordinates ``P = x[index] - center``.
    """

    def __init__(self, center, index):
        self.center = np.asarray(center, dtype=float)
        self.index = tuple(int(i) for i in index)
        if len(self.index) != self.center.size:
            raise ValueError("center and index must have the same length")

    def _pos(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., list(self.index)] - self.center

    def value(self, x):
        return self._value(self._pos(x))

    def _value(self, P):
        return self._local(P)[0]

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        g[..., list(self.index)] = self._local(self._pos(x))[1]
        return g

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        H = np.zeros(x.shape[:-1] + (n, n))
        Hl = self._local(self._pos(x))[2]
        for a, ia in enumerate(self.index):
            for b, ib in enumerate(self.index):
                H[..., ia, ib] = Hl[..., a, b]
        return H

    def _local(self, P):
        raise NotImplementedError


class SphericalObstacle(_PlanarShape):
    """Exterior of a circle or sphere: ``h = |p - c|^2 - radius^2``."""

    tag = "sphere"

    def __init__(self, center, radius, index=None):
        center = np.asarray(center, dtype=float)
        if index is None:
            index = tuple(range(center.size))
        super().__init__(center, index)
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def __repr__(self):
        return f"SphericalObstacle(center={self.center.tolist()}, radius={self.radius})"

    def _value(self, P):
        return np.einsum("...i,...i->...", P, P) - self.radius**2

    def _local(self, P):
        k = P.shape[-1]
        val = np.sum(P * P, axis=-1) - self.radius**2
        H = np.broadcast_to(2.0 * np.eye(k), P.shape[:-1] + (k, k))
        return val, 2.0 * P, H


class CoordinateBound(_PlanarShape):
    """Symmetric bound on one coordinate: ``h = limit^2 - x_i^2``."""

    tag = "bound"

    def __init__(self, index, limit):
        super().__init__([0.0], (index,))
        if not limit > 0:
            raise ValueError("limit must be positive")
        self.limit = float(limit)

    def __repr__(self):
        return f"CoordinateBound(index={self.index[0]}, limit={self.limit})"

    def _local(self, P):
        z = P[..., 0]
        H = np.broadcast_to(np.array([[-2.0]]), P.shape[:-1] + (1, 1))
        return self.limit**2 - z * z, -2.0 * P, H


def _sabs(z, eps):
    s = np.sqrt(z * z + eps * eps)
    return s, z / s, eps * eps / s**3


class ShapeConstraint(_PlanarShape):
    """Planar obstacle from the complex-course shape family.

    In local coordinates ``(X, Y) = pos - center``:

    ================  ==============================================
    ``ellipse``       ``ax X^2 + ay Y^2 - r^2``
    ``cardioid``      ``(ax X^2 + ay Y^2 - 1)^3 - a (ax X)^2 (ay Y)^3``
    ``diamond``       ``|ax X| + |ay Y| - r``
    ``square``        ``|ax X + ay Y| + |ax X - ay Y| - r``
    ================  ==============================================

    ``|z|`` is smoothed as ``sqrt(z^2 + eps^2)``.
    """

    KINDS = ("ellipse", "cardioid", "diamond", "square")

    def __init__(self, kind, center=(0.0, 0.0), ax=1.0, ay=1.0, r=1.0, a=1.0,
                 eps=SMOOTH_ABS_EPS, index=(0, 1)):
        if kind not in self.KINDS:
            raise ValueError(f"unknown shape {kind!r}; choose from {self.KINDS}")
        super().__init__(center, index)
        if len(self.index) != 2:
            raise ValueError("shape constraints are planar")
        self.kind = kind
        self.tag = kind
        self.ax, self.ay, self.r, self.a = float(ax), float(ay), float(r), float(a)
        self.eps = float(eps)

    def __repr__(self):
        return (f"ShapeConstraint({self.kind!r}, center={self.center.tolist()}, ax={self.ax}, "
                f"ay={self.ay}, r={self.r}, a={self.a})")

    def _local(self, P):
        X, Y = P[..., 0], P[..., 1]
        ax, ay = self.ax, self.ay
        g = np.zeros(P.shape)
        H = np.zeros(P.shape[:-1] + (2, 2))
        if self.kind == "ellipse":
            val = ax * X**2 + ay * Y**2 - self.r**2
            g[..., 0], g[..., 1] = 2 * ax * X, 2 * ay * Y
            H[..., 0, 0], H[..., 1, 1] = 2 * ax, 2 * ay
        elif self.kind == "cardioid":
            a = self.a
            Pq = ax * X**2 + ay * Y**2 - 1
            c = a * ax**2 * ay**3
            val = Pq**3 - c * X**2 * Y**3
            g[..., 0] = 6 * ax * X * Pq**2 - 2 * c * X * Y**3
            g[..., 1] = 6 * ay * Y * Pq**2 - 3 * c * X**2 * Y**2
            H[..., 0, 0] = 6 * ax * Pq**2 + 24 * ax**2 * X**2 * Pq - 2 * c * Y**3
            H[..., 1, 1] = 6 * ay * Pq**2 + 24 * ay**2 * Y**2 * Pq - 6 * c * X**2 * Y
            H[..., 0, 1] = H[..., 1, 0] = 24 * ax * ay * X * Y * Pq - 6 * c * X * Y**2
        else:
            if self.kind == "diamond":
                z1, z2 = ax * X, ay * Y
                # dz/dX, dz/dY for each smoothed term
                J = np.array([[ax, 0.0], [0.0, ay]])
            else:
                z1, z2 = ax * X + ay * Y, ax * X - ay * Y
                J = np.array([[ax, ay], [ax, -ay]])
            s1, d1, dd1 = _sabs(z1, self.eps)
            s2, d2, dd2 = _sabs(z2, self.eps)
            val = s1 + s2 - self.r
            g = d1[..., None] * J[0] + d2[..., None] * J[1]
            H = dd1[..., None, None] * np.outer(J[0], J[0]) + dd2[..., None, None] * np.outer(J[1], J[1])
        return val, g, H


class _SphereBank:
    """All spherical obstacles on the same coordinates, evaluated together."""

    def __init__(self, spheres):
        self.index = list(spheres[0].index)
        self.centers = np.array([c.center for c in spheres])
        self.r2 = np.array([c.radius**2 for c in spheres])

    def _P(self, x):
        return x[..., None, self.index] - self.centers

    def value(self, x):
        P = self._P(x)
        return np.einsum("...qi,...qi->...q", P, P) - self.r2


# --------------------------------------------------------------------------
# discrete barrier state


@dataclass
class DBaSSpec:
    """Constraints plus barrier defining a single barrier state.

    With ``shift=True`` the barrier state is offset by ``beta_d``, the summed
    barrier at ``desired``, so that it vanishes at the desired state.
    """

    constraints: list
    barrier: BarrierFunction = field(default_factory=BarrierFunction)
    desired: np.ndarray | None = None
    shift: bool = True

    def __post_init__(self):
        self.constraints = list(self.constraints)
        if not self.constraints:
            raise ValueError("DBaSSpec needs at least one constraint")
        if isinstance(self.barrier, str):
            self.barrier = BarrierFunction(self.barrier)
        if self.desired is not None:
            self.desired = np.asarray(self.desired, dtype=float)
        if self.shift and self.desired is not None:
            hd = [float(c.value(self.desired)) for c in self.constraints]
            if min(hd) <= 0:
                raise ValueError("desired state must be strictly safe when the shift is enabled")
            self.beta_d = float(sum(self.barrier.value(h) for h in hd))
        else:
            self.beta_d = 0.0
        self._build_banks()

    def _build_banks(self):
        groups = {}
        others = []
        for i, c in enumerate(self.constraints):
            if type(c) is SphericalObstacle:
                groups.setdefault(c.index, []).append(i)
            else:
                others.append(i)
        self._banks = [_SphereBank([self.constraints[i] for i in idx]) for idx in groups.values()]
        self._others = [self.constraints[i] for i in others]
        order = [i for idx in groups.values() for i in idx] + others
        self._identity_order = order == list(range(len(order)))
        self._inverse = np.argsort(order)

    def h_values(self, x):
        """Stacked constraint values, shape ``x.shape[:-1] + (q,)``."""
        x = np.asarray(x, dtype=float)
        parts = [b.value(x) for b in self._banks]
        parts += [c.value(x)[..., None] for c in self._others]
        H = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=-1)
        return H if self._identity_order else H[..., self._inverse]

    def beta(self, x):
        """``sum_i B(h_i(x))`` without the shift."""
        return np.sum(self.barrier.value(self.h_values(x)), axis=-1)

    def barrier_state(self, x):
        """Barrier state ``w = beta(x) - beta_d``."""
        return self.beta(x) - self.beta_d

    def beta_grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        for c in self.constraints:
            h = c.value(x)
            g = g + self.barrier.d1(h)[..., None] * c.grad(x)
        return g

    def beta_hess(self, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        H = np.zeros(x.shape[:-1] + (n, n))
        for c in self.constraints:
            h = c.value(x)
            gh = c.grad(x)
            H = H + self.barrier.d2(h)[..., None, None] * gh[..., :, None] * gh[..., None, :]
            H = H + self.barrier.d1(h)[..., None, None] * c.hess(x)
        return H


def dbas_next(spec, model, x, u):
    """Next barrier-state value ``sum_i B(h_i(f(x, u))) - beta_d``."""
    return float(spec.barrier_state(model.step(np.asarray(x, float)[: model.n], u)))


class AugmentedModel(DynamicsModel):
    """Plant with the barrier state appended as coordinate ``n``.

    The step raises :class:`UnsafeStateError` when the plant successor is not
    strictly safe.
    """

    def __init__(self, base, spec):
        self.base = base
        self.spec = spec
        self.dt = base.dt
        self.n = base.n + 1
        self.m = base.m
        self.name = f"{base.name}+dbas"
        self.position_index = base.position_index

    def __repr__(self):
        return f"AugmentedModel({self.base!r}, q={len(self.spec.constraints)})"

    def initial_state(self, x0):
        x0 = np.asarray(x0, dtype=float)
        return np.append(x0, self.spec.barrier_state(x0))

    def step(self, xh, u):
        xh = np.asarray(xh, dtype=float)
        x_next = self.base.step(xh[..., : self.base.n], u)
        w_next = self.spec.barrier_state(x_next)
        return np.concatenate([x_next, np.asarray(w_next)[..., None]], axis=-1)

    def jac(self, xh, u):
        xh = np.asarray(xh, dtype=float)
        n = self.base.n
        x = xh[..., :n]
        fx, fu = self.base.jac(x, u)
        x_next = self.base.step(x, u)
        g = self.spec.beta_grad(x_next)
        batch = xh.shape[:-1]
        A = np.zeros(batch + (n + 1, n + 1))
        A[..., :n, :n] = fx
        A[..., n, :n] = np.einsum("...i,...ij->...j", g, fx)
        B = np.empty(batch + (n + 1, self.m))
        B[..., :n, :] = fu
        B[..., n, :] = np.einsum("...i,...ij->...j", g, fu)
        return A, B


def augment(model, spec):
    return AugmentedModel(model, spec)


def safety_check(spec, trajectory):
    """Return ``(safe, min_h, (k, i))`` over a state trajectory.

    ``safe`` requires every constraint strictly positive at every step.
    ``(k, i)`` is the time index and constraint index of the minimum margin.
    Augmented states are accepted; constraints only read plant coordinates.
    """
    X = np.atleast_2d(np.asarray(trajectory, dtype=float))
    H = spec.h_values(X)
    if not np.all(np.isfinite(H)):
        H = np.where(np.isfinite(H), H, -np.inf)
    k, i = np.unravel_index(int(np.argmin(H)), H.shape)
    min_h = float(H[k, i])
    return bool(min_h > 0), min_h, (int(k), int(i))
