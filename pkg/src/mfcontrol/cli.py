"""Command-line front end: simulate, gradcheck, optimize, verify.

The CLI reads a strict TOML configuration, runs the requested computation,
and writes CSV tables plus a JSON manifest into the output directory.  A
machine-readable summary line goes to stdout; the exit status is 0 on
success and nonzero on solver blow-up, configuration errors, or failed
verification.  Worker count comes from --workers or MFCONTROL_WORKERS.
"""

import argparse
import json
import os
import sys

from . import csvio
from .adjoint import solve_adjoint
from .config import (
    ConfigError,
    build_control,
    build_initial,
    build_plan,
    build_problem,
    config_hash,
    load_config,
)
from .forward import BlowUpError, solve, worker_count
from .objective import cost, gradcheck, gradient
from .optimizer import descend, stationarity_residual
from . import verification

SUITES = ("heat", "duality", "lq", "wasserstein", "assumptions", "all")


def _parser():
    parser = argparse.ArgumentParser(
        prog="mfcontrol",
        description="Particle-based optimal control of mean-field "
                    "reaction-diffusion dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--output", default=None,
                       help="output directory (overrides [output].directory)")
        p.add_argument("--workers", type=int, default=None,
                       help="particle-slice worker count "
                            "(default: MFCONTROL_WORKERS or 1)")
        p.add_argument("--emit-gnuplot", action="store_true",
                       help="also write gnuplot scripts next to the CSVs")

    p_sim = sub.add_parser("simulate", help="run the forward particle system")
    common(p_sim)

    p_gc = sub.add_parser("gradcheck",
                          help="compare adjoint, tangent and finite-difference "
                               "directional derivatives")
    common(p_gc)
    p_gc.add_argument("--dirs", type=int, default=5,
                      help="number of random directions")
    p_gc.add_argument("--eps", type=float, default=1e-5,
                      help="central finite-difference step")

    p_opt = sub.add_parser("optimize", help="projected gradient descent")
    common(p_opt)
    p_opt.add_argument("--max-iters", type=int, default=None)
    p_opt.add_argument("--tol", type=float, default=None)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    common(p_ver)
    p_ver.add_argument("--suite", choices=SUITES, default="all")
    return parser


def _prepare(args):
    from . import __version__

    cfg = load_config(args.config)
    out_dir = args.output or cfg.output_directory
    os.makedirs(out_dir, exist_ok=True)
    digest = config_hash(cfg)
    meta = {"config_hash": digest, "seed": cfg.seed,
            "package": f"mfcontrol-{__version__}"}
    return cfg, out_dir, digest, meta


def _emit(summary):
    print(json.dumps(summary, sort_keys=True))


def _gnuplot_script(path, csv_name, title, using, ylabel):
    with open(path, "w") as handle:
        handle.write(
            "set datafile separator ','\n"
            f"set title '{title}'\n"
            "set xlabel 't'\n"
            f"set ylabel '{ylabel}'\n"
            f"plot '{csv_name}' skip 2 using {using} with lines notitle\n"
        )


def run_simulate(args) -> int:
    cfg, out_dir, digest, meta = _prepare(args)
    spec = build_problem(cfg)
    plan = build_plan(cfg)
    bundle = solve(spec, build_control(cfg), plan, build_initial(cfg),
                   workers=args.workers)
    columns, rows = csvio.trajectory_rows(bundle)
    csv_path = os.path.join(out_dir, "trajectory.csv")
    csvio.write_csv(csv_path, columns, rows, meta)
    csvio.write_manifest(os.path.join(out_dir, "simulate_manifest.json"),
                         digest, cfg.seed, "simulate")
    if args.emit_gnuplot:
        _gnuplot_script(os.path.join(out_dir, "plot_trajectory.gp"),
                        "trajectory.csv", "mode coefficients", "1:4",
                        "coefficient")
    _emit({"command": "simulate", "status": "ok", "config_hash": digest,
           "rows": len(rows), "output": csv_path})
    return 0


def run_gradcheck(args) -> int:
    cfg, out_dir, digest, meta = _prepare(args)
    spec = build_problem(cfg)
    plan = build_plan(cfg)
    report = gradcheck(spec, plan, build_initial(cfg), build_control(cfg),
                       n_dirs=args.dirs, eps=args.eps, workers=args.workers)
    columns = ("dir", "adjoint", "tangent", "fd", "relerr_at", "relerr_afd")
    rows = [{"dir": r.direction, "adjoint": r.adjoint_route,
             "tangent": r.tangent_route, "fd": r.central_difference,
             "relerr_at": r.rel_err_adjoint_tangent,
             "relerr_afd": r.rel_err_adjoint_fd} for r in report.rows]
    csvio.write_csv(os.path.join(out_dir, "gradcheck.csv"), columns, rows, meta)
    csvio.write_manifest(os.path.join(out_dir, "gradcheck_manifest.json"),
                         digest, cfg.seed, "gradcheck")
    summary = {"command": "gradcheck", "config_hash": digest,
               "status": "ok" if report.passed else "failed",
               "worst_adjoint_tangent": report.worst_adjoint_tangent,
               "worst_adjoint_fd": report.worst_adjoint_fd,
               "eps": report.eps}
    _emit(summary)
    return 0 if report.passed else 1


def run_optimize(args) -> int:
    cfg, out_dir, digest, meta = _prepare(args)
    spec = build_problem(cfg)
    plan = build_plan(cfg)
    x0 = build_initial(cfg)
    params = cfg.optimizer
    if args.max_iters is not None or args.tol is not None:
        params = type(params)(
            max_iters=args.max_iters or params.max_iters,
            step0=params.step0, armijo_c=params.armijo_c,
            shrink=params.shrink, tol=args.tol or params.tol)
    result = descend(spec, plan, x0, build_control(cfg), params,
                     workers=args.workers)
    log_columns = ("iter", "cost", "step", "residual", "feasibility")
    log_rows = [{"iter": it.iteration, "cost": it.cost, "step": it.step,
                 "residual": it.residual, "feasibility": it.feasibility_margin}
                for it in result.iterations]
    csvio.write_csv(os.path.join(out_dir, "optimization_log.csv"),
                    log_columns, log_rows, meta)
    columns, rows = csvio.control_rows(result.control, plan.dt)
    csvio.write_csv(os.path.join(out_dir, "optimal_control.csv"),
                    columns, rows, meta)
    final_run = solve(spec, result.control, plan, x0, workers=args.workers)
    adj = solve_adjoint(final_run)
    ccols, crows = csvio.costate_rows(final_run, adj)
    csvio.write_csv(os.path.join(out_dir, "costate.csv"), ccols, crows, meta)
    csvio.write_manifest(os.path.join(out_dir, "optimize_manifest.json"),
                         digest, cfg.seed, "optimize")
    if args.emit_gnuplot:
        _gnuplot_script(os.path.join(out_dir, "plot_optimization.gp"),
                        "optimization_log.csv", "cost per iteration", "1:2",
                        "cost")
    residual = stationarity_residual(result.control,
                                     gradient(final_run, adj), plan.dt)
    _emit({"command": "optimize", "status": "ok", "config_hash": digest,
           "converged": result.converged,
           "line_search_failed": result.line_search_failed,
           "iterations": len(result.iterations),
           "final_cost": result.final_cost,
           "stationarity_residual": residual,
           "feasibility_margin": result.control.feasibility_margin(plan.dt)})
    return 0


def run_verify(args) -> int:
    cfg, out_dir, digest, meta = _prepare(args)
    wanted = SUITES[:-1] if args.suite == "all" else (args.suite,)
    runners = {
        "heat": lambda: verification.heat_order_suite(seed=cfg.seed),
        "duality": lambda: verification.duality_suite(
            n_modes=cfg.n_modes, n_particles=cfg.n_particles,
            n_steps=cfg.n_steps, horizon=cfg.horizon, seed=cfg.seed),
        "lq": verification.riccati_suite,
        "wasserstein": lambda: verification.wasserstein_suite(seed=cfg.seed),
        "assumptions": lambda: verification.assumptions_suite(
            seed=cfg.seed, horizon=cfg.horizon),
    }
    all_passed = True
    results = {}
    for name in wanted:
        suite = runners[name]()
        all_passed &= suite.passed
        results[name] = {"passed": suite.passed, **{
            k: v for k, v in suite.summary.items()
            if isinstance(v, (int, float, bool, str))}}
        if suite.rows:
            csvio.write_csv(os.path.join(out_dir, f"verify_{name}.csv"),
                            suite.columns, suite.rows, meta)
    csvio.write_manifest(os.path.join(out_dir, "verify_manifest.json"),
                         digest, cfg.seed, f"verify:{args.suite}")
    _emit({"command": "verify", "config_hash": digest,
           "status": "ok" if all_passed else "failed", "suites": results})
    return 0 if all_passed else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.workers is not None:
        worker_count(args.workers)  # validate early
    handlers = {"simulate": run_simulate, "gradcheck": run_gradcheck,
                "optimize": run_optimize, "verify": run_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        _emit({"command": args.command, "status": "config_error",
               "violations": exc.violations})
        return 2
    except BlowUpError as exc:
        _emit({"command": args.command, "status": "blow_up",
               "step": exc.step_index, "worst_norm": exc.worst_norm})
        return 1
    except FileNotFoundError as exc:
        _emit({"command": args.command, "status": "error", "error": str(exc)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
