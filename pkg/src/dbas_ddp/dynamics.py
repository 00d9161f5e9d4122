"""
Discrete-time plant models.

Every model is a continuous vector field ``xdot(x, u)`` with analytic
Jacobians, discretized by forward Euler with step ``dt``::

    x_{k+1} = x_k + dt * xdot(x_k, u_k)

All vector-field and Jacobian methods broadcast over leading axes, so a
whole trajectory ``X`` of shape ``(N, n)`` can be linearized in one call.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelBlowUpError

DEFAULT_DT = 0.02
GRAVITY = 9.81


class DynamicsModel:
    """Euler-discretized control system.

    Subclasses set ``n``, ``m`` and implement ``xdot`` and ``xdot_jac``.
    """

    n: int
    m: int
    name = "model"
    # position coordinates used for goal distances and plotting
    position_index: tuple = ()

    def __init__(self, dt: float = DEFAULT_DT):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = float(dt)

    def xdot(self, x, u):
        raise NotImplementedError

    def xdot_jac(self, x, u):
        """Continuous-time Jacobians ``(A, B)`` of ``xdot``."""
        raise NotImplementedError

    def step(self, x, u):
        return euler_step(self, x, u, self.dt)

    def jac(self, x, u):
        """Jacobians ``(f_x, f_u)`` of the discrete step map."""
        A, B = self.xdot_jac(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        eye = np.eye(self.n)
        return eye + self.dt * A, self.dt * B

    def jac_x(self, x, u):
        return self.jac(x, u)[0]

    def jac_u(self, x, u):
        return self.jac(x, u)[1]

    def __repr__(self):
        return f"{type(self).__name__}(dt={self.dt})"


def euler_step(model, x, u, dt):
    """One forward-Euler step ``x + dt * xdot(x, u)``.

    Raises ``ModelBlowUpError`` if the result is not finite.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    x_next = x + dt * model.xdot(x, u)
    if not np.all(np.isfinite(x_next)):
        raise ModelBlowUpError(f"{type(model).__name__} step produced a non-finite state")
    return x_next


def fd_jacobian(model, x, u, eps=1e-6):
    """Central-difference approximations of ``(jac_x, jac_u)`` of ``model.step``.

    Test oracle only; the solvers always use the analytic Jacobians.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n, m = x.size, u.size
    Jx = np.empty((n, n))
    Ju = np.empty((n, m))
    for j in range(n):
        d = np.zeros(n)
        d[j] = eps
        Jx[:, j] = (model.step(x + d, u) - model.step(x - d, u)) / (2 * eps)
    for j in range(m):
        d = np.zeros(m)
        d[j] = eps
        Ju[:, j] = (model.step(x, u + d) - model.step(x, u - d)) / (2 * eps)
    return Jx, Ju


class PointRobot2D(DynamicsModel):
    """Planar double integrator. State ``(x, y, vx, vy)``, control ``(ax, ay)``."""

    n = 4
    m = 2
    name = "point_robot"
    position_index = (0, 1)
    velocity_index = (2, 3)

    def xdot(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return np.concatenate([x[..., 2:4], u], axis=-1)

    def xdot_jac(self, x, u):
        batch = np.shape(x)[:-1]
        A = np.zeros(batch + (4, 4))
        A[..., 0, 2] = 1.0
        A[..., 1, 3] = 1.0
        B = np.zeros(batch + (4, 2))
        B[..., 2, 0] = 1.0
        B[..., 3, 1] = 1.0
        return A, B

    def accel_affine(self, x):
        """Acceleration of the position coordinates as ``a(x) + b(x) u``."""
        return np.zeros(2), np.eye(2)


class CartPole(DynamicsModel):
    """Cart-pole with a point-mass pole.

    State ``(x, theta, xdot, thetadot)``; ``theta = 0`` is hanging down and
    ``theta = pi`` is upright. Control is the horizontal force on the cart.
    """

    n = 4
    m = 1
    name = "cart_pole"
    position_index = (0,)
    velocity_index = (2,)

    def __init__(self, dt=DEFAULT_DT, cart_mass=1.0, pole_mass=0.1, pole_length=0.5, gravity=GRAVITY):
        super().__init__(dt)
        self.mc = float(cart_mass)
        self.mp = float(pole_mass)
        self.l = float(pole_length)
        self.g = float(gravity)

    def _terms(self, x):
        th, thd = x[..., 1], x[..., 3]
        s, c = np.sin(th), np.cos(th)
        D = self.mc + self.mp * s * s
        return th, thd, s, c, D

    def xdot(self, x, u):
        x = np.asarray(x, dtype=float)
        F = np.asarray(u, dtype=float)[..., 0]
        _, thd, s, c, D = self._terms(x)
        mp, l, g = self.mp, self.l, self.g
        xdd = (F + mp * s * (l * thd**2 + g * c)) / D
        thdd = (-F * c - mp * l * thd**2 * c * s - (self.mc + mp) * g * s) / (l * D)
        return np.stack([x[..., 2], thd, xdd, thdd], axis=-1)

    def xdot_jac(self, x, u):
        x = np.asarray(x, dtype=float)
        F = np.asarray(u, dtype=float)[..., 0]
        _, thd, s, c, D = self._terms(x)
        mp, mc, l, g = self.mp, self.mc, self.l, self.g
        dD = 2 * mp * s * c

        num_x = F + mp * s * (l * thd**2 + g * c)
        dnx_th = mp * c * (l * thd**2 + g * c) - mp * g * s * s
        dnx_thd = 2 * mp * l * s * thd

        num_t = -F * c - mp * l * thd**2 * c * s - (mc + mp) * g * s
        dnt_th = F * s - mp * l * thd**2 * (c * c - s * s) - (mc + mp) * g * c
        dnt_thd = -2 * mp * l * thd * c * s

        batch = np.shape(x)[:-1]
        A = np.zeros(batch + (4, 4))
        A[..., 0, 2] = 1.0
        A[..., 1, 3] = 1.0
        A[..., 2, 1] = (dnx_th * D - num_x * dD) / D**2
        A[..., 2, 3] = dnx_thd / D
        A[..., 3, 1] = (dnt_th * D - num_t * dD) / (l * D**2)
        A[..., 3, 3] = dnt_thd / (l * D)
        B = np.zeros(batch + (4, 1))
        B[..., 2, 0] = 1.0 / D
        B[..., 3, 0] = -c / (l * D)
        return A, B

    def accel_affine(self, x):
        """Cart acceleration as ``a(x) + b(x) u``."""
        _, thd, s, c, D = self._terms(np.asarray(x, dtype=float))
        a = self.mp * s * (self.l * thd**2 + self.g * c) / D
        return np.array([a]), np.array([[1.0 / D]])


class DiffDrive(DynamicsModel):
    """Differential-drive robot. State ``(x, y, theta)``, control ``(u1, u2)``
    the right and left wheel speeds."""

    n = 3
    m = 2
    name = "diff_drive"
    position_index = (0, 1)

    def __init__(self, dt=DEFAULT_DT, wheel_radius=0.2, half_width=0.2):
        super().__init__(dt)
        self.r = float(wheel_radius)
        self.d = float(half_width)

    def xdot(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        th = x[..., 2]
        v = self.r * (u[..., 0] + u[..., 1]) / 2
        om = self.r / (2 * self.d) * (u[..., 0] - u[..., 1])
        return np.stack([v * np.cos(th), v * np.sin(th), om], axis=-1)

    def xdot_jac(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        th = x[..., 2]
        c, s = np.cos(th), np.sin(th)
        v = self.r * (u[..., 0] + u[..., 1]) / 2
        batch = np.shape(x)[:-1]
        A = np.zeros(batch + (3, 3))
        A[..., 0, 2] = -v * s
        A[..., 1, 2] = v * c
        B = np.zeros(batch + (3, 2))
        half_r = self.r / 2
        B[..., 0, 0] = B[..., 0, 1] = half_r * c
        B[..., 1, 0] = B[..., 1, 1] = half_r * s
        k = self.r / (2 * self.d)
        B[..., 2, 0] = k
        B[..., 2, 1] = -k
        return A, B


class Quadrotor12(DynamicsModel):
    """Rigid-body quadrotor with Z-Y-X Euler angles.

    State: position (3), attitude ``(phi, theta, psi)`` (3), world-frame
    velocity (3), body angular rates ``(p, q, r)`` (3). Control: total
    thrust and three body torques. Inertia is diagonal.
    """

    n = 12
    m = 4
    name = "quadrotor"
    position_index = (0, 1, 2)
    # |cos(pitch)| below this is treated as the Euler-angle singularity
    singular_tol = 1e-6

    def __init__(self, dt=DEFAULT_DT, mass=1.0, inertia=(1.0, 1.0, 1.0), gravity=GRAVITY):
        super().__init__(dt)
        self.mass = float(mass)
        self.inertia = np.asarray(inertia, dtype=float)
        self.g = float(gravity)

    @property
    def hover_control(self):
        return np.array([self.mass * self.g, 0.0, 0.0, 0.0])

    def _check_pitch(self, ct):
        if np.any(np.abs(ct) < self.singular_tol):
            raise ModelBlowUpError("quadrotor reached the pitch = +-pi/2 Euler-angle singularity")

    def xdot(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        ph, th, ps = x[..., 3], x[..., 4], x[..., 5]
        p, q, r = x[..., 9], x[..., 10], x[..., 11]
        T = u[..., 0]
        sph, cph = np.sin(ph), np.cos(ph)
        sth, cth = np.sin(th), np.cos(th)
        sps, cps = np.sin(ps), np.cos(ps)
        self._check_pitch(cth)
        tth = sth / cth
        a = T / self.mass
        ax = a * (cph * sth * cps + sph * sps)
        ay = a * (cph * sth * sps - sph * cps)
        az = a * cph * cth - self.g
        phd = p + (q * sph + r * cph) * tth
        thd = q * cph - r * sph
        psd = (q * sph + r * cph) / cth
        Jx, Jy, Jz = self.inertia
        pd = ((Jy - Jz) * q * r + u[..., 1]) / Jx
        qd = ((Jz - Jx) * p * r + u[..., 2]) / Jy
        rd = ((Jx - Jy) * p * q + u[..., 3]) / Jz
        return np.stack(
            [x[..., 6], x[..., 7], x[..., 8], phd, thd, psd, ax, ay, az, pd, qd, rd], axis=-1
        )

    def xdot_jac(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        ph, th, ps = x[..., 3], x[..., 4], x[..., 5]
        p, q, r = x[..., 9], x[..., 10], x[..., 11]
        T = u[..., 0]
        sph, cph = np.sin(ph), np.cos(ph)
        sth, cth = np.sin(th), np.cos(th)
        sps, cps = np.sin(ps), np.cos(ps)
        self._check_pitch(cth)
        tth = sth / cth
        a = T / self.mass
        batch = np.shape(x)[:-1]
        A = np.zeros(batch + (12, 12))
        B = np.zeros(batch + (12, 4))

        A[..., 0, 6] = A[..., 1, 7] = A[..., 2, 8] = 1.0

        # Euler-angle kinematics
        qs_rc = q * sph + r * cph
        qc_rs = q * cph - r * sph
        A[..., 3, 3] = qc_rs * tth
        A[..., 3, 4] = qs_rc / cth**2
        A[..., 3, 9] = 1.0
        A[..., 3, 10] = sph * tth
        A[..., 3, 11] = cph * tth
        A[..., 4, 3] = -qs_rc
        A[..., 4, 10] = cph
        A[..., 4, 11] = -sph
        A[..., 5, 3] = qc_rs / cth
        A[..., 5, 4] = qs_rc * sth / cth**2
        A[..., 5, 10] = sph / cth
        A[..., 5, 11] = cph / cth

        # thrust direction (third column of the body-to-world rotation)
        r3 = np.stack([cph * sth * cps + sph * sps, cph * sth * sps - sph * cps, cph * cth], axis=-1)
        dr3_dph = np.stack([-sph * sth * cps + cph * sps, -sph * sth * sps - cph * cps, -sph * cth], axis=-1)
        dr3_dth = np.stack([cph * cth * cps, cph * cth * sps, -cph * sth], axis=-1)
        dr3_dps = np.stack([-cph * sth * sps + sph * cps, cph * sth * cps + sph * sps, np.zeros_like(ph)], axis=-1)
        A[..., 6:9, 3] = a[..., None] * dr3_dph
        A[..., 6:9, 4] = a[..., None] * dr3_dth
        A[..., 6:9, 5] = a[..., None] * dr3_dps
        B[..., 6:9, 0] = r3 / self.mass

        Jx, Jy, Jz = self.inertia
        A[..., 9, 10] = (Jy - Jz) * r / Jx
        A[..., 9, 11] = (Jy - Jz) * q / Jx
        A[..., 10, 9] = (Jz - Jx) * r / Jy
        A[..., 10, 11] = (Jz - Jx) * p / Jy
        A[..., 11, 9] = (Jx - Jy) * q / Jz
        A[..., 11, 10] = (Jx - Jy) * p / Jz
        B[..., 9, 1] = 1.0 / Jx
        B[..., 10, 2] = 1.0 / Jy
        B[..., 11, 3] = 1.0 / Jz
        return A, B


MODELS = {
    "point_robot": PointRobot2D,
    "cart_pole": CartPole,
    "diff_drive": DiffDrive,
    "quadrotor": Quadrotor12,
}


def make_model(kind, dt=DEFAULT_DT, **params):
    try:
        cls = MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(MODELS)}") from None
    return cls(dt=dt, **params)
