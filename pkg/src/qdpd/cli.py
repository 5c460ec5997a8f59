"""Command line front end: run experiments, sweep the gain, report the
bandwidth/rate relation, or just solve/validate a configuration."""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import os
import sys

import numpy as np

from . import analysis, harness, objective, params
from .codec import DesynchronizationError
from .dynamics import DivergenceError
from .params import InfeasibleParametersError
from .quantizer import SaturationError

_ALGORITHMIC = (
    SaturationError,
    DivergenceError,
    DesynchronizationError,
    InfeasibleParametersError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdpd",
        description="Quantized distributed primal-dual simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured experiment")
    p_run.add_argument("config")
    p_run.add_argument("--exact-comparison", action="store_true",
                       help="also run the exact-communication flow and export it")

    p_sweep = sub.add_parser("sweep-alpha", help="re-run a config over several gains")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--alphas", required=True,
                         help="comma-separated gains, e.g. 0.5,1,2")

    p_bw = sub.add_parser("bandwidth-report",
                          help="bandwidth/rate table for a derived-mode config")
    p_bw.add_argument("config")
    p_bw.add_argument("--alphas", default="0.25,0.5,1,2")

    p_solve = sub.add_parser("solve", help="print the centralized reference solution")
    p_solve.add_argument("config")

    p_val = sub.add_parser("validate", help="check parameter feasibility only")
    p_val.add_argument("config")
    return parser


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    traj, diagnostics, manifest = harness.run_experiment(cfg)
    out = harness.output_dir(cfg)
    paths = harness.export(traj, diagnostics, manifest, out)
    for p in paths:
        print(p)
    if args.exact_comparison:
        exact = harness.run_exact_experiment(cfg)
        problem = harness.build_problem(cfg)
        solution = objective.solve_centralized(problem)
        err_q = analysis.tracking_errors(traj, solution)
        err_e = analysis.tracking_errors(exact, solution)
        path = os.path.join(out, "comparison.csv")
        with open(path, "w") as fh:
            fh.write("t,tracking_error_quantized,tracking_error_exact\n")
            for t, a, b in zip(traj.times, err_q, err_e):
                fh.write(",".join(format(v, ".17g") for v in (t, a, b)) + "\n")
        print(path)
    return 0


def _sweep_one(cfg_alpha):
    cfg, alpha = cfg_alpha
    cfg = dataclasses.replace(cfg, alpha=alpha)
    traj, diagnostics, manifest = harness.run_experiment(cfg)
    errors = np.array([s.tracking_error for s in diagnostics])
    rate, resid = analysis.fit_rate(traj.times, errors)
    return alpha, rate, resid


def _cmd_sweep(args) -> int:
    cfg = harness.load_config(args.config)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    if not alphas:
        raise harness.ConfigError("no gains given")
    jobs = [(cfg, a) for a in alphas]
    try:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=min(len(jobs), os.cpu_count() or 1)
        ) as pool:
            results = list(pool.map(_sweep_one, jobs))
    except (OSError, concurrent.futures.process.BrokenProcessPool):
        results = [_sweep_one(j) for j in jobs]
    print(f"{'alpha':>8} {'fitted_rate':>12} {'fit_residual':>12}")
    for alpha, rate, resid in results:
        print(f"{alpha:8.4g} {rate:12.6g} {resid:12.3g}")
    return 0


def _cmd_bandwidth(args) -> int:
    cfg = harness.load_config(args.config)
    if cfg.mode != "derived":
        raise InfeasibleParametersError("bandwidth-report needs mode=derived")
    problem = harness.build_problem(cfg)
    g = harness.build_graph(cfg, problem.agent_count)
    solution = objective.solve_centralized(problem)
    pset = harness.resolve_parameters(cfg, problem, g, solution)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    print(f"{'alpha':>8} {'T_alpha':>12} {'L_alpha':>8} {'B_alpha':>12} "
          f"{'gamma_alpha':>12} {'bound':>12} {'holds':>6}")
    ok = True
    for alpha in alphas:
        r = params.bandwidth_relation(alpha, pset)
        ok = ok and r.holds
        print(f"{alpha:8.4g} {r.T_alpha:12.6g} {r.L_alpha:8d} {r.bandwidth:12.6g} "
              f"{r.rate:12.6g} {r.bound:12.6g} {str(r.holds):>6}")
    return 0 if ok else 1


def _cmd_solve(args) -> int:
    cfg = harness.load_config(args.config)
    problem = harness.build_problem(cfg)
    solution = objective.solve_centralized(problem)
    print("x_star:", " ".join(format(v, ".17g") for v in np.atleast_1d(solution.x_star)))
    print("solution_interval:",
          format(solution.interval_lo, ".17g"),
          format(solution.interval_hi, ".17g"))
    print("M1:", format(solution.M1, ".17g"))
    print("M2:", format(solution.M2, ".17g"))
    print("f_star:", format(solution.f_star, ".17g"))
    return 0


def _cmd_validate(args) -> int:
    cfg = harness.load_config(args.config)
    problem = harness.build_problem(cfg)
    g = harness.build_graph(cfg, problem.agent_count)
    solution = objective.solve_centralized(problem)
    pset = harness.resolve_parameters(cfg, problem, g, solution)
    print(f"feasible: mode={pset.mode} T={pset.T:.6g} L={pset.L} l0={pset.l0:.6g}")
    if pset.mode == "derived":
        ok, slack = params.check_T(pset.T, pset)
        print(f"period predicate slack: {slack:.6g}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep-alpha": _cmd_sweep,
    "bandwidth-report": _cmd_bandwidth,
    "solve": _cmd_solve,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 2
    try:
        return _COMMANDS[args.command](args)
    except harness.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except _ALGORITHMIC as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
