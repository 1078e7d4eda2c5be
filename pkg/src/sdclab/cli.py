"""Command-line interface: ``sdclab {solve,baseline,sweep,render,gen}``.

Exit status is 0 on success, 1 on a usage or configuration error and 2 on a
numerical failure (breakdown, failed factorization, non-convergence).
"""
import argparse
from dataclasses import replace
import json
import logging
from pathlib import Path
import sys

from .config import ConfigError, format_config, parse_config
from .faults import FaultSpec
from .harness import BaselineError, Experiment, run_baseline, scaling_sweep, sweep
from .linalg import generate, parse_problem
from .mmio import MatrixMarketError, mm_write
from .preconditioners import FactorizationError
from .report import emit_results, read_csv, render_heatmap
from .solvers import BreakdownError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

logger = logging.getLogger("sdclab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="fault-injection seed")
    p.add_argument("--out-dir", default=d(None), help="directory for outputs")
    p.add_argument("--jobs", type=int, default=d(1), help="parallel worker processes")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def _problem_flags(p):
    p.add_argument("--config", help="INI config file (see sdclab.config)")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--problem", help="e.g. poisson2d:32x32, convdiff2d:64x64, poisson3d:8x8x8")
    src.add_argument("--matrix", help="Matrix Market file; right-hand side is A @ ones")
    p.add_argument("--velocity", type=_floats, help="convection velocity, e.g. 10,0")
    p.add_argument("--stack", help="outer,inner,preconditioner or solver,preconditioner")
    p.add_argument("--subdomains", type=int, help="number of subdomains k")


def _detector_flags(p):
    p.add_argument("--norm-bound", action="store_true", help="enable the projection-length bound")
    p.add_argument("--residual-check", type=int, metavar="INTERVAL",
                   help="explicit residual check every INTERVAL iterations")
    p.add_argument("--response", choices=("record_only", "abort_inner"))


def build_parser():
    parser = _Parser(prog="sdclab", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("solve", help="run one solve and print its statistics")
    _global_flags(p, suppress=True)
    _problem_flags(p)
    _detector_flags(p)
    p.add_argument("--inject", type=int, metavar="J", help="corrupt the J-th preconditioner apply")
    p.add_argument("--scale", type=float, default=1.0, help="fault scale factor")
    p.add_argument("--faulty", type=int, default=1, help="number of faulty subdomains")
    p.add_argument("--index-mode", choices=("apply", "inner_solve"), default="apply")

    p = sub.add_parser("baseline", help="fault-free solve; report K")
    _global_flags(p, suppress=True)
    _problem_flags(p)
    p.add_argument("--index-mode", choices=("apply", "inner_solve"), default=None)

    p = sub.add_parser("sweep", help="exhaustive fault-injection sweep")
    _global_flags(p, suppress=True)
    _problem_flags(p)
    p.add_argument("--signs", action="store_true", help="sweep scale factors +-{1e-2, 1, 1e2}")
    p.add_argument("--scaling", choices=("none", "strong", "weak"))
    p.add_argument("--heatmap", action="store_true", help="also write heatmap.svg")

    p = sub.add_parser("render", help="aggregated CSV to SVG heatmap")
    _global_flags(p, suppress=True)
    p.add_argument("csv", help="aggregated grid CSV")
    p.add_argument("--out", help="output SVG (default: heatmap.svg beside the CSV or in --out-dir)")
    p.add_argument("--title", default="")
    p.add_argument("--value", default="mean_overhead_pct",
                   choices=("mean_overhead_pct", "mean_overhead_pct_with_abort"))

    p = sub.add_parser("gen", help="write a generated problem as Matrix Market")
    _global_flags(p, suppress=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--velocity", type=_floats)
    p.add_argument("--out", required=True, help="output .mtx path")
    return parser


def _run_config(args):
    """Config file (if any) with command-line overrides applied."""
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    problem = args.problem or (f"mm:{args.matrix}" if args.matrix else None)
    run = parse_config(text, problem=problem, stack=args.stack, subdomains=args.subdomains,
                       seed=args.seed, jobs=args.jobs, velocity=args.velocity,
                       signs=getattr(args, "signs", False))
    det = run.sweep.stack.detectors
    if getattr(args, "norm_bound", False) or getattr(args, "residual_check", None) or getattr(args, "response", None):
        det = replace(det,
                      norm_bound_enabled=det.norm_bound_enabled or args.norm_bound,
                      residual_check_enabled=det.residual_check_enabled or bool(args.residual_check),
                      residual_check_interval=args.residual_check or det.residual_check_interval,
                      response=args.response or det.response)
        run.sweep.stack.detectors = det
    if getattr(args, "scaling", None):
        run.scaling.mode = args.scaling
    if getattr(args, "heatmap", False):
        run.heatmap = True
    return run


def _echo_config(run, args, out):
    out.mkdir(parents=True, exist_ok=True)
    if args.config:
        (out / Path(args.config).name).write_text(run.text, encoding="utf-8")
    (out / "effective.cfg").write_text(format_config(run), encoding="utf-8")


def _report(title, stats, extra):
    print(title)
    for key, value in {**extra, **stats.summary()}.items():
        if isinstance(value, float):
            value = f"{value:.6e}"
        print(f"  {key:24s} {value}")


def cmd_solve(args):
    run = _run_config(args)
    cfg = run.sweep
    exp = Experiment.build(cfg.problem, cfg.stack)
    fault = None
    if args.inject is not None:
        fault = FaultSpec(target_apply_index=args.inject, faulty_count=args.faulty,
                          scale_factor=args.scale, seed=cfg.seed, index_mode=args.index_mode)
    x, stats, counter, wrapper = exp.solve(fault, cfg.stack.detectors.response)
    err = float(abs(x - 1.0).max())
    extra = {"problem": cfg.problem.label(), "unknowns": exp.A.shape[0],
             "stack": cfg.stack.label(), "subdomains": cfg.stack.n_subdomains,
             "K": stats.preconditioner_applies, "max_abs_error": err}
    if fault is not None:
        extra["fault_fired_at"] = wrapper.fired_at
    _report("solve", stats, extra)
    if args.out_dir:
        out = Path(args.out_dir)
        _echo_config(run, args, out)
        (out / "solve.json").write_text(json.dumps({**extra, **stats.summary()}, indent=2) + "\n")
    if not stats.converged:
        print("solve did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_baseline(args):
    run = _run_config(args)
    cfg = run.sweep
    mode = args.index_mode or cfg.index_mode
    exp = Experiment.build(cfg.problem, cfg.stack)
    base = run_baseline(exp, mode)
    info = {"problem": cfg.problem.label(), "stack": cfg.stack.label(),
            "subdomains": cfg.stack.n_subdomains, "index_mode": mode, "K": base.K}
    _report("baseline", base.stats, info)
    if args.out_dir:
        out = Path(args.out_dir)
        _echo_config(run, args, out)
        (out / "baseline.json").write_text(json.dumps({**info, **base.stats.summary()}, indent=2) + "\n")
    return EXIT_OK


def _progress(verbose):
    if not verbose:
        return None

    def show(done, total):
        if done == total or done % 100 == 0:
            print(f"  {done}/{total} runs", file=sys.stderr)
    return show


def cmd_sweep(args):
    run = _run_config(args)
    cfg = run.sweep
    out = Path(args.out_dir or "sdclab-out")
    _echo_config(run, args, out)
    progress = _progress(args.verbose)
    if run.scaling.mode == "none":
        results = {None: sweep(cfg, progress=progress)}
    else:
        results = scaling_sweep(cfg, run.scaling.mode, run.scaling.subdomain_counts,
                                run.scaling.per_rank, progress=progress)
    for k, res in results.items():
        where = out if k is None else out / f"k{k}"
        emit_results(res, where, heatmap=run.heatmap)
        print(f"{res.config.stack.label()} on {res.config.problem.label()} "
              f"(k={res.config.stack.n_subdomains}): K={res.baseline.K}, "
              f"{len(res.cells)} cells -> {where}")
    return EXIT_OK


def cmd_render(args):
    rows = read_csv(args.csv)
    if args.out:
        path = Path(args.out)
    elif args.out_dir:
        path = Path(args.out_dir) / "heatmap.svg"
    else:
        path = Path(args.csv).with_name("heatmap.svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    render_heatmap(rows, path, title=args.title, value=args.value)
    print(path)
    return EXIT_OK


def cmd_gen(args):
    spec = parse_problem(args.problem, args.velocity or (10.0, 0.0))
    if spec.kind == "matrix-market-file":
        raise ConfigError("gen needs a generated problem kind")
    A, _ = generate(spec)
    out = Path(args.out)
    if args.out_dir and not out.is_absolute():
        out = Path(args.out_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    mm_write(A, out, comment=f"sdclab {spec.label()} velocity={spec.velocity}")
    print(f"wrote {spec.label()} ({A.shape[0]} unknowns, {A.nnz} nonzeros) to {out}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "baseline": cmd_baseline, "sweep": cmd_sweep,
            "render": cmd_render, "gen": cmd_gen}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (BaselineError, BreakdownError, FactorizationError, ArithmeticError) as exc:
        print(f"sdclab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, MatrixMarketError, FileNotFoundError, ValueError) as exc:
        print(f"sdclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
