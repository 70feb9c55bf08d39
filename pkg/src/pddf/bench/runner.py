"""Run solver comparisons on a suite and store the results as CSV."""

from __future__ import annotations

import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from ..config import SolverConfig
from ..pd_solver import TraceRow
from ..problem import SeparableProblem, UsageError
from ..solve import SOLVERS, solve
from .suite import SuiteSpec

__all__ = [
    "RunRecord",
    "run_problem",
    "run_suite",
    "write_records",
    "read_records",
    "write_timings",
    "read_timings",
    "write_trace",
    "RECORD_FIELDS",
]

logger = logging.getLogger(__name__)

# Histories of long runs exceed the default field limit.
csv.field_size_limit(min(sys.maxsize, 2**31 - 1))

RECORD_FIELDS = ("problem", "solver", "n", "m", "f0", "final_f", "evals", "termination", "history")


@dataclass
class RunRecord:
    """Summary of one solver run on one problem.

    ``history`` holds ``(cumulative sub-evaluations, best f so far)`` pairs
    and starts at the evaluation of ``x0``.
    """

    problem: str
    solver: str
    n: int
    m: int
    f0: float
    history: List[tuple]
    wall_time: float = 0.0
    termination: str = ""
    evals: int = 0
    final_f: float = math.nan
    trace: List[TraceRow] = field(default_factory=list, repr=False)

    def same_outcome(self, other: "RunRecord") -> bool:
        """Equality of everything except wall time."""
        keys = ("problem", "solver", "n", "m", "f0", "history", "termination", "evals", "final_f")
        return all(_eq(getattr(self, k), getattr(other, k)) for k in keys)


def _eq(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


def run_problem(
    p: SeparableProblem,
    solver: str,
    cfg: SolverConfig = SolverConfig(),
    eval_delay: Optional[float] = None,
    workers: Optional[int] = None,
) -> RunRecord:
    """Run one solver; a crash becomes an unsolved record, not an exception."""
    if eval_delay:
        p = p.with_delay(eval_delay)
    t0 = time.monotonic()
    try:
        rep = solve(p, solver, cfg, workers)
    except Exception as exc:  # recorded, the suite goes on
        logger.warning("%s on %s failed: %s", solver, p.name, exc)
        try:
            f0 = p.value(p.x0)
        except Exception:
            f0 = math.nan
        return RunRecord(p.name, solver, p.n, p.m, f0, [], time.monotonic() - t0, "error", 0, math.nan)
    return RunRecord(
        problem=p.name,
        solver=solver,
        n=p.n,
        m=p.m,
        f0=rep.f0,
        history=[(int(e), float(f)) for e, f in rep.history],
        wall_time=rep.wall_time,
        termination=rep.termination,
        evals=rep.evals.total,
        final_f=rep.best_f,
        trace=list(rep.trace),
    )


def run_suite(
    spec: SuiteSpec,
    solvers: Sequence[str] = ("pddf", "ls"),
    cfg: SolverConfig = SolverConfig(),
    eval_delay: Optional[float] = None,
    workers: Optional[int] = None,
    progress=None,
) -> List[RunRecord]:
    """Every solver on every problem of ``spec``, sequentially and with fresh counters."""
    bad = [s for s in solvers if s not in SOLVERS]
    if bad:
        raise UsageError(f"unknown solvers {bad}; choose from {', '.join(SOLVERS)}")
    records = []
    for p in spec.problems():
        for s in solvers:
            rec = run_problem(p, s, cfg, eval_delay, workers)
            records.append(rec)
            if progress is not None:
                progress(rec)
    return records


# CSV -------------------------------------------------------------------------


def _fmt_history(h: Iterable[tuple]) -> str:
    return " ".join(f"{e}:{f!r}" for e, f in h)


def _parse_history(s: str) -> List[tuple]:
    out = []
    for item in s.split():
        e, _, f = item.partition(":")
        out.append((int(e), float(f)))
    return out


def write_records(records: Iterable[RunRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow(
                [r.problem, r.solver, r.n, r.m, repr(r.f0), repr(r.final_f), r.evals, r.termination, _fmt_history(r.history)]
            )


def read_records(path) -> List[RunRecord]:
    """Parse a records CSV; malformed content raises :class:`UsageError`."""
    try:
        fh = Path(path).open(newline="")
    except OSError as exc:
        raise UsageError(f"cannot read records file {path}: {exc}") from None
    with fh:
        try:
            rows = list(csv.reader(fh))
        except csv.Error as exc:
            raise UsageError(f"{path}: {exc}") from None
    if not rows or tuple(rows[0]) != RECORD_FIELDS:
        raise UsageError(f"{path}: expected header {','.join(RECORD_FIELDS)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(RECORD_FIELDS):
            raise UsageError(f"{path}:{lineno}: expected {len(RECORD_FIELDS)} fields, got {len(row)}")
        try:
            prob, solver, n, m, f0, ff, ev, term, hist = row
            out.append(
                RunRecord(prob, solver, int(n), int(m), float(f0), _parse_history(hist), 0.0, term, int(ev), float(ff))
            )
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def write_timings(records: Iterable[RunRecord], path) -> None:
    """Wall times go to their own file so the records file stays reproducible."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("problem", "solver", "wall_time"))
        for r in records:
            w.writerow((r.problem, r.solver, repr(r.wall_time)))


def read_timings(path) -> Dict[tuple, float]:
    try:
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        return {(r["problem"], r["solver"]): float(r["wall_time"]) for r in rows}
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read timings file {path}: {exc}") from None


def write_trace(rows: Iterable[TraceRow], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TraceRow.FIELDS)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row.as_tuple()])
