"""Suite summaries (success rate, normalized cost, iteration counts) and file export."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import NormalizationError


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


@dataclass
class SummaryRow:
    solver: str
    trials: int
    successes: int
    success_pct: float
    mean_cost: float | None
    normalized_cost: float | None
    mean_mi: float | None
    mean_ci: float | None
    min_eig: float | None
    unsafe: int
    errors: int
    by_obstacles: dict = field(default_factory=dict)  # count -> [successes, trials]


@dataclass
class SummaryTable:
    reference: str
    rows: dict

    def row(self, solver):
        return self.rows[solver]

    def to_dict(self):
        return {"reference": self.reference,
                "solvers": {name: asdict(r) for name, r in self.rows.items()}}

    def to_json(self):
        # stable key order and no timing, so reruns are byte-identical
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format(self, sep="\t"):
        head = ["solver", "trials", "success_pct", "mean_cost", "normalized", "mean_mi", "mean_ci", "min_eig"]
        lines = [sep.join(head)]
        for r in self.rows.values():
            cells = [r.solver, str(r.trials), f"{r.success_pct:.1f}", _fmt(r.mean_cost),
                     "-" if r.normalized_cost is None else f"{r.normalized_cost:.2f}x",
                     _fmt(r.mean_mi), _fmt(r.mean_ci), _fmt(r.min_eig)]
            lines.append(sep.join(cells))
        return "\n".join(lines)


def _fmt(v):
    return "-" if v is None else f"{v:.4g}"


def summarize(results, reference="dbas"):
    """Build a :class:`SummaryTable` from ``{solver: [TrialResult, ...]}``.

    Costs and iteration counts average over successful trials only. The
    normalized cost is each solver's mean divided by the reference solver's
    mean (``dbas`` if present, else the first solver). Raises
    :class:`NormalizationError` when the reference has no successes.
    """
    if not results:
        raise ValueError("no results to summarize")
    if reference not in results:
        reference = next(iter(results))
    rows = {}
    for solver, trials in results.items():
        ok = [r for r in trials if r.success]
        eigs = [r.min_eig for r in trials if r.min_eig is not None]
        counts = {}
        for r in trials:
            c = counts.setdefault(str(r.n_obstacles), [0, 0])
            c[0] += int(r.success)
            c[1] += 1
        rows[solver] = SummaryRow(
            solver=solver,
            trials=len(trials),
            successes=len(ok),
            success_pct=100.0 * len(ok) / len(trials) if trials else 0.0,
            mean_cost=_mean([r.cost for r in ok]),
            normalized_cost=None,
            mean_mi=_mean([r.mi for r in ok]),
            mean_ci=_mean([r.ci for r in ok]),
            min_eig=min(eigs) if eigs else None,
            unsafe=sum(not r.safe for r in trials),
            errors=sum(r.error is not None for r in trials),
            by_obstacles=dict(sorted(counts.items(), key=lambda kv: int(kv[0]))),
        )
    ref = rows[reference].mean_cost
    if ref is None or not ref > 0:
        raise NormalizationError(f"cost normalization undefined: {reference!r} has no successful trials")
    for row in rows.values():
        if row.mean_cost is not None:
            row.normalized_cost = 1.0 if row.solver == reference else row.mean_cost / ref
    return SummaryTable(reference=reference, rows=rows)


# --------------------------------------------------------------------------
# export


def write_summary_json(table, path):
    Path(path).write_text(table.to_json())


def read_summary_json(path):
    return json.loads(Path(path).read_text())


def trajectory_columns(n, m):
    return ["k", "t"] + [f"x{i}" for i in range(n)] + [f"u{j}" for j in range(m)] + ["w", "min_h"]


def write_trajectory_csv(path, states, controls, dt, barrier=None, min_h=None):
    """One row per knot point. Controls on the final row are ``nan``.

    Floats are written with ``repr`` so reading them back is bit-exact.
    """
    X = np.asarray(states, dtype=float)
    U = np.asarray(controls, dtype=float)
    N1, n = X.shape
    m = U.shape[1]
    w = np.full(N1, np.nan) if barrier is None else np.asarray(barrier, dtype=float)
    hm = np.full(N1, np.nan) if min_h is None else np.asarray(min_h, dtype=float)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(trajectory_columns(n, m))
        for k in range(N1):
            u = U[k] if k < len(U) else np.full(m, np.nan)
            row = [k, repr(k * dt)] + [repr(float(v)) for v in X[k]] + [repr(float(v)) for v in u]
            out.writerow(row + [repr(float(w[k])), repr(float(hm[k]))])


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: returns a dict of arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body])
    xs = [i for i, h in enumerate(head) if h.startswith("x")]
    us = [i for i, h in enumerate(head) if h.startswith("u")]
    return {
        "k": data[:, 0].astype(int),
        "t": data[:, 1],
        "states": data[:, xs],
        "controls": data[:-1, us],
        "w": data[:, head.index("w")],
        "min_h": data[:, head.index("min_h")],
    }


def write_dat(path, columns, comment=None):
    """Whitespace-separated columns with a ``#`` header line, for external plotting."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    header = " ".join(names) if comment is None else f"{comment}\n" + " ".join(names)
    np.savetxt(path, data, header=header, fmt="%.10g")


def write_records_csv(path, results):
    """Scalar per-trial fields for every solver, one line per trial."""
    records = [r.record() for trials in results.values() for r in trials]
    if not records:
        return
    keys = list(records[0])
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=keys)
        out.writeheader()
        out.writerows(records)


def write_trace_csv(path, log):
    keys = ["iteration", "cost", "eps", "min_eig", "mu", "accepted"]
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=keys)
        out.writeheader()
        for entry in log:
            out.writerow({k: entry.get(k) for k in keys})
