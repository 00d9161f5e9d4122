"""Command-line interface: solve, bench, compare and trace.

Every command prints tab-delimited results to stdout. With ``--out DIR``,
trajectories, summaries and figures are written there too.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 cost normalization undefined.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench.config import SOLVERS, builtin_configs, load_config
from .bench.report import (
    summarize,
    write_dat,
    write_records_csv,
    write_summary_json,
    write_trace_csv,
    write_trajectory_csv,
)
from .bench.trials import problem_for_trial, run_suite, solve_problem
from .errors import ConfigError, NormalizationError

log = logging.getLogger("dbas_ddp")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NORMALIZATION = 0, 1, 2, 3

STATE_NAMES = {
    "point_robot": ["x", "y", "vx", "vy"],
    "cart_pole": ["x", "theta", "xdot", "thetadot"],
    "diff_drive": ["x", "y", "heading"],
    "quadrotor": ["x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "p", "q", "r"],
}


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not solver failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="dbas-ddp", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON file or builtin config name")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", type=Path, default=None, help="directory for files and figures")

    sp = sub.add_parser("solve", help="solve one trial and export the trajectory")
    common(sp)
    sp.add_argument("--solver", choices=SOLVERS, default=None)
    sp.add_argument("--trial", type=int, default=0, help="trial index (environment sample)")

    sp = sub.add_parser("bench", help="Monte-Carlo suite for one or more solvers")
    common(sp)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--parallel", type=int, default=1)
    sp.add_argument("--solver", default=None, help="solver or comma-separated list")

    sp = sub.add_parser("compare", help="run several solvers on the same trials")
    common(sp)
    sp.add_argument("--solvers", default="dbas,penalty,cbf")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--parallel", type=int, default=1)

    sp = sub.add_parser("trace", help="per-iteration solver diagnostics")
    common(sp)
    sp.add_argument("--solver", default=None, help="solver or comma-separated list")
    sp.add_argument("--trial", type=int, default=0)

    sub.add_parser("configs", help="list builtin configurations")
    return p


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = int(args.seed)
    return cfg


def _solvers(text, cfg):
    names = [s.strip() for s in (text or cfg.get("solver", "dbas")).split(",") if s.strip()]
    bad = [s for s in names if s not in SOLVERS]
    if bad or not names:
        raise ConfigError(f"unknown solver(s) {bad}; choose from {SOLVERS}")
    return names


def _outdir(args):
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _problem_and_results(cfg, solvers, trial):
    problem = problem_for_trial(cfg, trial)
    results = {}
    for s in solvers:
        r = solve_problem(problem, s, keep=True)
        r.trial_index = trial
        results[s] = r
    return problem, results


def _export_trials(out, problem, results, dt):
    from . import plotting

    model = problem.model
    for s, r in results.items():
        write_trajectory_csv(out / f"trajectory_{s}.csv", r.states, r.controls, dt, r.barrier, r.h_min_trace)
        cols = {"t": dt * np.arange(len(r.states))}
        cols.update({f"x{i}": r.states[:, i] for i in range(model.n)})
        if r.barrier is not None:
            cols["w"] = r.barrier
            cols["min_h"] = r.h_min_trace
        write_dat(out / f"trajectory_{s}.dat", cols)
    if len(model.position_index) >= 2:
        plotting.plot_paths(problem, results, out / "paths.png", title=model.name)
    plotting.plot_states(problem, results, dt, out / "states.png", STATE_NAMES.get(model.name))
    if problem.spec is not None:
        plotting.plot_barrier(results, dt, out / "barrier.png")


def cmd_solve(args):
    cfg = _config(args)
    (solver,) = _solvers(args.solver, cfg)
    problem, results = _problem_and_results(cfg, [solver], args.trial)
    r = results[solver]
    rec = r.record()
    keys = ["solver", "trial_index", "success", "reached", "safe", "cost", "mi", "ci", "iterations",
            "min_h", "min_eig", "n_obstacles", "error"]
    print("\t".join(keys))
    print("\t".join(str(rec[k]) for k in keys))
    out = _outdir(args)
    if out is not None:
        _export_trials(out, problem, results, float(cfg.get("dt", 0.02)))
        (out / "result.json").write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if r.success else EXIT_SOLVER


def _suite(args, solvers):
    cfg = _config(args)
    trials = int(args.trials if args.trials is not None else cfg.get("trials", 1))
    if trials < 1:
        raise ConfigError("--trials must be >= 1")
    results = {s: run_suite(cfg, trials, parallelism=args.parallel, solver=s) for s in solvers}
    table = summarize(results)
    print(table.format())
    out = _outdir(args)
    if out is not None:
        from . import plotting

        write_summary_json(table, out / "summary.json")
        write_records_csv(out / "trials.csv", results)
        counts = sorted({int(k) for row in table.rows.values() for k in row.by_obstacles})
        cols = {"obstacles": counts}
        for s, row in table.rows.items():
            cols[s] = [100.0 * row.by_obstacles[str(c)][0] / row.by_obstacles[str(c)][1]
                       if str(c) in row.by_obstacles else np.nan for c in counts]
        write_dat(out / "success_by_obstacles.dat", cols)
        plotting.plot_success_by_obstacles(table, out / "success_by_obstacles.png")
    return cfg, table, out


def cmd_bench(args):
    cfg = load_config(args.config)
    _suite(args, _solvers(args.solver, cfg))
    return EXIT_OK


def cmd_compare(args):
    cfg = load_config(args.config)
    solvers = _solvers(args.solvers, cfg)
    cfg, table, out = _suite(args, solvers)
    if out is not None:
        problem, results = _problem_and_results(cfg, solvers, 0)
        _export_trials(out, problem, results, float(cfg.get("dt", 0.02)))
    return EXIT_OK


def cmd_trace(args):
    cfg = _config(args)
    solvers = _solvers(args.solver, cfg)
    out = _outdir(args)
    _, results = _problem_and_results(cfg, solvers, args.trial)
    print("\t".join(["solver", "iteration", "cost", "eps", "min_eig", "mu", "accepted"]))
    failed = False
    for s, r in results.items():
        entries = r.diagnostics or []
        for e in entries:
            print("\t".join([s] + [str(e[k]) for k in ("iteration", "cost", "eps", "min_eig", "mu", "accepted")]))
        failed |= r.error is not None
        if out is not None:
            from . import plotting

            write_trace_csv(out / f"trace_{s}.csv", entries)
            acc = [e for e in entries if e["accepted"]]
            write_dat(out / f"trace_{s}.dat", {
                "iteration": [e["iteration"] for e in acc],
                "cost": [e["cost"] for e in acc],
                "eps": [e["eps"] for e in acc],
                "min_eig": [e["min_eig"] for e in acc],
            })
            plotting.plot_trace(entries, out / f"trace_{s}.png", title=s)
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_configs(args):
    print("name")
    for name in builtin_configs():
        print(name)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "compare": cmd_compare, "trace": cmd_trace,
            "configs": cmd_configs}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NormalizationError as exc:
        print(f"normalization error: {exc}", file=sys.stderr)
        return EXIT_NORMALIZATION


if __name__ == "__main__":
    sys.exit(main())
