"""Command-line front end: ``solve``, ``bench`` and ``profile``.

Exit codes: 0 on normal termination, 2 on usage errors (bad flags, missing
or malformed files, unknown configuration keys), 3 when an objective
evaluation fails where a value is mandatory.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from .bench.plot import write_profile_csv, write_profile_svg
from .bench.profiles import data_profile, performance_profile
from .bench.runner import read_records, read_timings, run_suite, write_records, write_timings, write_trace
from .bench.suite import acceptance_suite, default_suite, load_problem, load_suite
from .config import SolverConfig, apply_overrides, load_config
from .pd_solver import feasibility_gap, stationarity_residual
from .problem import EvaluationError, UsageError
from .solve import SOLVERS, solve

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_EVAL = 0, 2, 3
BUILTIN_SUITES = {"default": default_suite, "acceptance": acceptance_suite}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML file of solver settings")
    p.add_argument("--workers", type=int, help="block-search threads (falls back to $PDDF_WORKERS)")
    p.add_argument("--eval-delay-ms", type=float, default=0.0, help="artificial pause per sub-function evaluation")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--show-config", action="store_true", help="print the effective settings and exit")
    p.add_argument("--seed", type=int, default=None, help="reserved; all solvers are deterministic")
    p.add_argument("overrides", nargs="*", metavar="key=value", help="configuration overrides")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pddf", description="Penalty decomposition derivative-free solver and benchmarks.")
    parser.add_argument("--show-config", action="store_true", help="print the default settings and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    ps = sub.add_parser("solve", help="solve one problem file")
    ps.add_argument("--problem", help="YAML problem file")
    ps.add_argument("--solver", choices=SOLVERS, default="pddf")
    _common(ps)

    pb = sub.add_parser("bench", help="run solvers on a suite and write records")
    pb.add_argument("--suite", help="YAML suite file, or 'default' / 'acceptance'")
    pb.add_argument("--solver", choices=SOLVERS, action="append", help="repeatable; default pddf and ls")
    _common(pb)

    pp = sub.add_parser("profile", help="data and performance profiles from a records file")
    pp.add_argument("--records", help="records CSV (default: OUT/records.csv)")
    pp.add_argument("--eps", type=float, default=1e-2, help="accuracy level of the solved test")
    pp.add_argument("--budget", type=int, default=100, help="largest budget, in groups of m(n+1) evaluations")
    _common(pp)
    return parser


def _config(args) -> SolverConfig:
    cfg = load_config(getattr(args, "config", None))
    cfg = apply_overrides(cfg, getattr(args, "overrides", None) or [])
    workers = getattr(args, "workers", None)
    if workers is None and os.environ.get("PDDF_WORKERS"):
        try:
            workers = int(os.environ["PDDF_WORKERS"])
        except ValueError:
            raise UsageError(f"PDDF_WORKERS must be an integer, got {os.environ['PDDF_WORKERS']!r}") from None
    if workers is not None:
        cfg = apply_overrides(cfg, [f"workers={workers}"])
    return cfg


def _show(cfg: SolverConfig) -> int:
    sys.stdout.write(yaml.safe_dump(cfg.as_dict(), sort_keys=False))
    return EXIT_OK


def _delay(args) -> float:
    if args.eval_delay_ms < 0:
        raise UsageError("--eval-delay-ms must be non-negative")
    return args.eval_delay_ms / 1000.0


def _num(v):
    return None if v is None or not math.isfinite(v) else float(v)


def cmd_solve(args) -> int:
    cfg = _config(args)
    if args.show_config:
        return _show(cfg)
    if not args.problem:
        raise UsageError("solve needs --problem")
    p = load_problem(args.problem)
    delay = _delay(args)
    if delay:
        p = p.with_delay(delay)
    rep = solve(p, args.solver, cfg)
    residual = None
    if p.has_gradients:
        residual = float(np.max(np.abs(rep.final_x - p.region.project(rep.final_x - p.gradient(rep.final_x)))))
    gap = feasibility_gap(rep.final_state) if rep.final_state is not None else None
    pd_res = None
    if rep.final_state is not None and rep.trace:
        pd_res = _num(rep.trace[-1].residual) if not math.isnan(rep.trace[-1].residual) else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = {
        "problem": p.name,
        "solver": args.solver,
        "n": p.n,
        "m": p.m,
        "f0": _num(rep.f0),
        "final_f": _num(rep.final_f),
        "final_x": [float(v) for v in rep.final_x],
        "stationarity_inf": residual,
        "penalty_residual": pd_res,
        "feasibility_gap": _num(gap) if gap is not None else None,
        "termination": rep.termination,
        "outer_iters": rep.outer_iters,
        "evals_total": rep.evals.total,
        "evals_per_sub": list(rep.evals.per_sub),
        "wall_time": rep.wall_time,
        "seed": args.seed,
    }
    (out / "result.json").write_text(json.dumps(result, indent=2) + "\n")
    write_trace(rep.trace, out / "trace.csv")
    print(f"problem {p.name}  solver {args.solver}  f = {rep.final_f:.10g}  evals = {rep.evals.total}  termination = {rep.termination}")
    if residual is not None:
        print(f"projected gradient residual (inf-norm) = {residual:.3e}")
    return EXIT_OK


def _suite(name: Optional[str]):
    if name is None:
        raise UsageError("bench needs --suite (a YAML file, 'default' or 'acceptance')")
    if name in BUILTIN_SUITES and not Path(name).exists():
        return BUILTIN_SUITES[name]()
    return load_suite(name)


def _slug(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in s)


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.show_config:
        return _show(cfg)
    spec = _suite(args.suite)
    solvers = args.solver or ["pddf", "ls"]
    problems_done = []

    def progress(rec):
        problems_done.append(rec)
        print(f"{rec.problem:40s} {rec.solver:14s} f={rec.final_f:.6g} evals={rec.evals} ({rec.termination})", flush=True)

    records = run_suite(spec, solvers, cfg, _delay(args) or None, None, progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "records.csv")
    write_timings(records, out / "timings.csv")
    traces = out / "traces"
    traces.mkdir(exist_ok=True)
    for r in records:
        write_trace(r.trace, traces / f"{_slug(r.problem)}__{r.solver}.csv")
    print(f"wrote {len(records)} records to {out / 'records.csv'}")
    return EXIT_OK


def _eps_tag(eps: float) -> str:
    return f"{eps:.0e}".replace("+", "")


def cmd_profile(args) -> int:
    cfg = _config(args)
    if args.show_config:
        return _show(cfg)
    out = Path(args.out)
    path = Path(args.records) if args.records else out / "records.csv"
    records = read_records(path)
    if args.budget < 1:
        raise UsageError("--budget must be positive")
    timings = path.with_name("timings.csv")
    if timings.exists():
        t = read_timings(timings)
        for r in records:
            r.wall_time = t.get((r.problem, r.solver), math.nan)
    out.mkdir(parents=True, exist_ok=True)
    tag = _eps_tag(args.eps)
    dp = data_profile(records, args.eps, np.arange(0.0, args.budget + 1.0))
    write_profile_csv(dp, out / f"data_profile_eps{tag}.csv")
    write_profile_svg(dp, out / f"data_profile_eps{tag}.svg", title=f"Data profile, eps={args.eps:g}", xlabel="budget (groups of m(n+1) sub-evaluations)")
    pe = performance_profile(records, "sub_evals_to_solved", args.eps)
    write_profile_csv(pe, out / f"perf_profile_evals_eps{tag}.csv")
    write_profile_svg(pe, out / f"perf_profile_evals_eps{tag}.svg", title=f"Performance profile (sub-evaluations), eps={args.eps:g}", xlabel="performance ratio", log_x=True)
    if timings.exists():
        pw = performance_profile(records, "wall_time", args.eps)
        write_profile_csv(pw, out / f"perf_profile_time_eps{tag}.csv")
        write_profile_svg(pw, out / f"perf_profile_time_eps{tag}.svg", title=f"Performance profile (wall time), eps={args.eps:g}", xlabel="performance ratio", log_x=True)
    for s, c in dp.items():
        print(f"{s:14s} data profile at budget {args.budget}: {c.final:.3f} ({c.n_problems} problems)")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "profile": cmd_profile}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            if args.show_config:
                return _show(SolverConfig())
            raise UsageError("a subcommand is required: solve, bench or profile")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pddf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as exc:
        print(f"pddf: evaluation failure: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
