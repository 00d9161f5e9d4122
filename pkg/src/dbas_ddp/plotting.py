"""Static figures for solves and benchmark suites (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

from .safety import CoordinateBound, ShapeConstraint, SphericalObstacle  # noqa: E402

COLORS = {"dbas": "tab:blue", "penalty": "tab:red", "cbf": "tab:olive", "unconstrained": "0.5"}


def _color(solver):
    return COLORS.get(solver, None)


def draw_constraints(ax, constraints, extent=None):
    """Draw obstacles in the x-y plane (spheres as circles, shapes as h=0 contours)."""
    for c in constraints:
        if isinstance(c, SphericalObstacle):
            ax.add_patch(Circle(c.center[:2], c.radius, color="0.75", zorder=0))
        elif isinstance(c, ShapeConstraint):
            if extent is None:
                continue
            xs = np.linspace(extent[0], extent[1], 300)
            ys = np.linspace(extent[2], extent[3], 300)
            G = np.stack(np.meshgrid(xs, ys), axis=-1)
            full = np.zeros(G.shape[:-1] + (max(c.index) + 1,))
            full[..., c.index[0]] = G[..., 0]
            full[..., c.index[1]] = G[..., 1]
            h = c.value(full)
            ax.contourf(xs, ys, h, levels=[h.min() - 1, 0.0], colors=["0.75"], zorder=0)


def _extent(trajs, constraints, pad=0.5):
    pts = [X[:, :2] for X in trajs if X is not None]
    for c in constraints:
        if isinstance(c, SphericalObstacle):
            pts.append(np.array([c.center[:2] - c.radius, c.center[:2] + c.radius]))
        elif isinstance(c, ShapeConstraint):
            pts.append(np.array([c.center - 1.0, c.center + 1.0]))
    P = np.vstack(pts)
    P = P[np.isfinite(P).all(axis=1)]
    lo, hi = P.min(axis=0) - pad, P.max(axis=0) + pad
    return lo[0], hi[0], lo[1], hi[1]


def plot_paths(problem, results, path, title=None):
    """Planar (x, y) paths of several solvers over the obstacle field."""
    fig, ax = plt.subplots(figsize=(5, 5))
    trajs = [r.states for r in results.values()]
    ext = _extent(trajs, problem.constraints)
    draw_constraints(ax, problem.constraints, ext)
    for solver, r in results.items():
        if r.states is None:
            continue
        ax.plot(r.states[:, 0], r.states[:, 1], color=_color(solver),
                label=f"{solver} ({'ok' if r.success else 'fail'})")
    if problem.tracking is not None:
        ref = problem.cost.target
        ax.plot(ref[:, 0], ref[:, 1], "g--", lw=0.8, label="reference")
    ax.plot(*problem.x0[:2], "o", color="tab:red", ms=6)
    if problem.goal is not None:
        ax.plot(*problem.goal[:2], "o", color="tab:green", ms=6)
    ax.set_xlim(ext[0], ext[1])
    ax.set_ylim(ext[2], ext[3])
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_states(problem, results, dt, path, names=None):
    """Every state coordinate against time; bounds drawn as dashed lines."""
    n = problem.model.n
    names = names or [f"x{i}" for i in range(n)]
    fig, axes = plt.subplots(n, 1, figsize=(6, 1.6 * n), sharex=True)
    axes = np.atleast_1d(axes)
    for solver, r in results.items():
        if r.states is None:
            continue
        t = dt * np.arange(len(r.states))
        for i, ax in enumerate(axes):
            ax.plot(t, r.states[:, i], color=_color(solver), label=solver)
    for c in problem.constraints:
        if isinstance(c, CoordinateBound):
            ax = axes[c.index[0]]
            ax.axhline(c.limit, color="k", ls="--", lw=0.8)
            ax.axhline(-c.limit, color="k", ls="--", lw=0.8)
    if problem.goal is not None:
        for i, ax in enumerate(axes):
            ax.axhline(problem.goal[i], color="tab:green", ls=":", lw=0.8)
    for ax, name in zip(axes, names):
        ax.set_ylabel(name)
    axes[-1].set_xlabel("t [s]")
    axes[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_barrier(results, dt, path):
    """Barrier state w over time (larger means closer to a constraint)."""
    fig, ax = plt.subplots(figsize=(6, 3))
    for solver, r in results.items():
        if r.barrier is None:
            continue
        w = np.asarray(r.barrier, dtype=float)
        ax.plot(dt * np.arange(len(w)), w, color=_color(solver), label=solver)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("barrier state w")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_success_by_obstacles(table, path):
    """Grouped bars of success rate per obstacle count."""
    solvers = list(table.rows)
    counts = sorted({int(k) for r in table.rows.values() for k in r.by_obstacles})
    fig, ax = plt.subplots(figsize=(6, 3))
    width = 0.8 / max(len(solvers), 1)
    for i, s in enumerate(solvers):
        bo = table.rows[s].by_obstacles
        rate = [100.0 * bo[str(c)][0] / bo[str(c)][1] if str(c) in bo else 0.0 for c in counts]
        ax.bar(np.arange(len(counts)) + (i - (len(solvers) - 1) / 2) * width, rate, width,
               color=_color(s), label=s)
    ax.set_xticks(np.arange(len(counts)))
    ax.set_xticklabels([str(c) for c in counts])
    ax.set_xlabel("obstacles")
    ax.set_ylabel("success [%]")
    ax.set_ylim(0, 105)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_trace(log, path, title=None):
    """Cost and min H_uu eigenvalue against iteration."""
    acc = [e for e in log if e["accepted"]]
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 4), sharex=True)
    if acc:
        it = [e["iteration"] for e in acc]
        a1.semilogy(it, [e["cost"] for e in acc], "-o", ms=2)
        a2.plot(it, [e["min_eig"] for e in acc], "-o", ms=2)
    a2.axhline(0.0, color="k", lw=0.6)
    a1.set_ylabel("cost")
    a2.set_ylabel("min eig H_uu")
    a2.set_xlabel("iteration")
    if title:
        a1.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
