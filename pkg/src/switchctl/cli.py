"""Command-line entry point: ``switchctl {solve,sweep,check-gradient,oracle,check-switching-pc}``."""

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .config import ConfigError, build_problem, dump_config, load_config
from .homotopy import HomotopyAborted, run_homotopy, sweep
from .objective import ObjectiveParams
from .oracle import TinyInstance, brute_force_min, check_exact_switching_pc, fd_gradient_check
from .report import write_homotopy_csv, write_run, write_summary_csv

EXIT_OK, EXIT_ERROR, EXIT_NOT_SWITCHED = 0, 1, 2

# relative-error limits for the finite-difference check
FD_TOL_QUADRATIC = 1e-6
FD_TOL_QUARTIC = 1e-5

logger = logging.getLogger("switchctl")


def _float_list(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load(path):
    cfg = load_config(path)
    return cfg, build_problem(cfg, Path(path).resolve().parent)


def _emit(obj):
    print(json.dumps(obj, indent=2))


def cmd_solve(args):
    cfg, problem = _load(args.config)
    out = Path(args.output)
    try:
        rep = run_homotopy(problem, cfg.alpha, cfg.eps, cfg.schedule)
    except HomotopyAborted as exc:
        out.mkdir(parents=True, exist_ok=True)
        write_homotopy_csv(exc.log, out / "homotopy.csv")
        logger.error("%s (partial log in %s)", exc, out / "homotopy.csv")
        return EXIT_ERROR
    write_run(rep, problem, out, cfg, states=args.states)
    dump_config(cfg, out / "config.json")
    _emit(rep.summary())
    if not rep.log[-1].newton.converged:
        logger.error("final homotopy node did not converge")
        return EXIT_ERROR
    return EXIT_OK if rep.switched else EXIT_NOT_SWITCHED


def cmd_sweep(args):
    cfg, problem = _load(args.config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    reports = sweep(problem, cfg.alpha, cfg.eps, cfg.schedule, args.param, args.values)
    for k, (v, rep) in enumerate(zip(args.values, reports)):
        entry = out / f"{k:03d}_{args.param}_{v:g}"
        if isinstance(rep, HomotopyAborted):
            entry.mkdir(exist_ok=True)
            write_homotopy_csv(rep.log, entry / "homotopy.csv")
        elif not isinstance(rep, Exception):
            write_run(rep, problem, entry, cfg.replace(**{args.param: v}))
    write_summary_csv(list(zip(args.values, reports)), out / "summary.csv")
    failed = [v for v, r in zip(args.values, reports) if isinstance(r, Exception)]
    _emit({"summary": str(out / "summary.csv"), "failed": failed})
    if failed:
        return EXIT_ERROR
    return EXIT_OK if all(r.switched for r in reports) else EXIT_NOT_SWITCHED


def cmd_check_gradient(args):
    cfg, problem = _load(args.config)
    results = {}
    ok = True
    for gamma in args.gamma:
        params = ObjectiveParams(cfg.alpha, 0.0, cfg.eps, gamma)
        err = fd_gradient_check(problem, params, args.trials, args.step, args.seed)
        tol = FD_TOL_QUADRATIC if gamma == 0 else FD_TOL_QUARTIC
        results[repr(gamma)] = {"max_rel_error": err, "tol": tol, "pass": err <= tol}
        ok &= err <= tol
    _emit(results)
    return EXIT_OK if ok else EXIT_ERROR


def cmd_oracle(args):
    cfg, problem = _load(args.config)
    inst = TinyInstance(problem, tuple(args.grid))
    rep = run_homotopy(problem, cfg.alpha, cfg.eps, cfg.schedule)
    params = ObjectiveParams(cfg.alpha, rep.beta_max, cfg.eps, 0.0)
    best, best_u = brute_force_min(inst, params)
    ok = rep.J <= best + args.tol
    _emit({"solver_J": rep.J, "beta_max": rep.beta_max, "oracle_min": best,
           "oracle_u": best_u.tolist(), "candidates": inst.size, "pass": bool(ok)})
    return EXIT_OK if ok else EXIT_ERROR


def cmd_check_switching_pc(args):
    cfg, problem = _load(args.config)
    chk = check_exact_switching_pc(problem, cfg.alpha, cfg.schedule, args.margin)
    ok = chk.max_product <= args.tol * chk.scale
    _emit({"norm_S0_sq": chk.norm_S0_sq, "beta_threshold": chk.beta_threshold,
           "beta_max": chk.beta_max, "products": chk.products.tolist(),
           "max_product": chk.max_product, "scale": chk.scale, "pass": bool(ok)})
    return EXIT_OK if ok else EXIT_ERROR


def build_parser():
    p = argparse.ArgumentParser(prog="switchctl", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the homotopy and write artifacts")
    s.add_argument("config")
    s.add_argument("-o", "--output", default="out")
    s.add_argument("--states", action="store_true", help="also write states.csv")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="independent runs over alpha or eps")
    s.add_argument("config")
    s.add_argument("--param", choices=("alpha", "eps"), required=True)
    s.add_argument("--values", type=_float_list, required=True)
    s.add_argument("-o", "--output", default="sweep")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("check-gradient", help="finite-difference check of the smooth gradient")
    s.add_argument("config")
    s.add_argument("--gamma", type=_float_list, default=[0.0, 10.0])
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--step", type=float, default=1e-5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_check_gradient)

    s = sub.add_parser("oracle", help="compare the solver with exhaustive grid search")
    s.add_argument("config")
    s.add_argument("--grid", type=_float_list, default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("check-switching-pc", help="exact switching for piecewise-constant controls")
    s.add_argument("config")
    s.add_argument("--margin", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=cmd_check_switching_pc)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, np.linalg.LinAlgError, HomotopyAborted) as exc:
        logger.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
