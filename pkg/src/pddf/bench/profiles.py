"""Data profiles and performance profiles over solver run records.

A run solves a problem to accuracy ``eps`` once its best value ``fS``
satisfies ``f0 - fS >= (1 - eps) (f0 - fbest)``, where ``fbest`` is the best
value reached on that problem by any solver in the comparison.  Budgets in
data profiles are counted in groups of ``m (n + 1)`` sub-function
evaluations.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..problem import UsageError

__all__ = [
    "ProfileCurve",
    "solved",
    "best_values",
    "evals_to_solve",
    "data_profile",
    "performance_profile",
    "EPS_LEVELS",
]

logger = logging.getLogger(__name__)

EPS_LEVELS = (1e-2, 1e-4)
METRICS = ("sub_evals_to_solved", "wall_time")


@dataclass(frozen=True)
class ProfileCurve:
    """Step curve ``grid -> fraction`` for one solver.

    ``kind`` is ``"data"`` (grid in budget groups) or ``"performance"``
    (grid in performance ratios).
    """

    solver: str
    kind: str
    eps: float
    grid: tuple
    fraction: tuple
    n_problems: int

    def at(self, x: float) -> float:
        """Value of the right-continuous step curve at ``x``."""
        k = int(np.searchsorted(np.asarray(self.grid), x, side="right")) - 1
        return 0.0 if k < 0 else self.fraction[k]

    @property
    def final(self) -> float:
        return self.fraction[-1] if self.fraction else 0.0


def solved(f0: float, fS: float, fbest: float, eps: float) -> bool:
    """Literal accuracy test ``f0 - fS >= (1 - eps) (f0 - fbest)``."""
    return bool(f0 - fS >= (1.0 - eps) * (f0 - fbest))


def _group(records) -> "OrderedDict[str, Dict[str, object]]":
    by_problem: "OrderedDict[str, Dict[str, object]]" = OrderedDict()
    for r in records:
        slot = by_problem.setdefault(r.problem, {})
        if r.solver in slot:
            raise UsageError(f"duplicate record for problem {r.problem!r}, solver {r.solver!r}")
        slot[r.solver] = r
    return by_problem


def _solvers(records) -> List[str]:
    seen: List[str] = []
    for r in records:
        if r.solver not in seen:
            seen.append(r.solver)
    return seen


def _run_best(r) -> float:
    vals = [f for _, f in r.history if math.isfinite(f)]
    return min(vals) if vals else math.inf


def best_values(records) -> Dict[str, float]:
    """``fbest`` per problem: the best value any solver reached."""
    return {name: min(_run_best(r) for r in runs.values()) for name, runs in _group(records).items()}


def evals_to_solve(record, fbest: float, eps: float) -> float:
    """First cumulative evaluation count at which ``record`` solves its problem."""
    for e, f in record.history:
        if solved(record.f0, f, fbest, eps):
            return float(e)
    return math.inf


def _prepare(records, eps: float):
    if not 0 < eps < 1:
        raise UsageError("eps must lie in (0, 1)")
    records = list(records)
    solvers = _solvers(records)
    problems = _group(records)
    kept = OrderedDict()
    for name, runs in problems.items():
        missing = [s for s in solvers if s not in runs]
        if missing:
            raise UsageError(f"problem {name!r} has no record for solvers {missing}")
        f0 = next(iter(runs.values())).f0
        fbest = min(_run_best(r) for r in runs.values())
        if not math.isfinite(fbest) or not fbest < f0:
            logger.info("excluding %s from profiles: no solver improved on f0", name)
            continue
        kept[name] = (runs, fbest)
    return solvers, kept


def data_profile(records: Iterable, eps: float, kappa_grid: Optional[Sequence[float]] = None) -> Dict[str, ProfileCurve]:
    """Fraction of problems solved within ``kappa`` groups of ``m (n + 1)`` evaluations."""
    solvers, kept = _prepare(records, eps)
    grid = np.arange(0.0, 101.0) if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise UsageError("kappa grid must be strictly increasing")
    out = {}
    for s in solvers:
        needed = []
        for runs, fbest in kept.values():
            r = runs[s]
            needed.append(evals_to_solve(r, fbest, eps) / (r.m * (r.n + 1)))
        needed = np.asarray(needed)
        count = len(needed)
        frac = tuple(float(np.count_nonzero(needed <= k) / count) if count else 0.0 for k in grid)
        out[s] = ProfileCurve(s, "data", eps, tuple(float(g) for g in grid), frac, count)
    return out


def _cost(r, fbest, eps, metric) -> float:
    e = evals_to_solve(r, fbest, eps)
    if metric == "sub_evals_to_solved" or not math.isfinite(e):
        return e
    return float(r.wall_time)


def performance_profile(
    records: Iterable,
    metric: str = "sub_evals_to_solved",
    eps: float = 1e-2,
    ratio_grid: Optional[Sequence[float]] = None,
) -> Dict[str, ProfileCurve]:
    """Fraction of problems solved within a cost ratio of the best solver.

    Unsolved runs have ratio ``inf``.  Without ``ratio_grid`` the grid is 1
    plus every finite ratio that occurs.
    """
    if metric not in METRICS:
        raise UsageError(f"metric must be one of {METRICS}")
    solvers, kept = _prepare(records, eps)
    ratios = {s: [] for s in solvers}
    for runs, fbest in kept.values():
        costs = {s: _cost(runs[s], fbest, eps, metric) for s in solvers}
        best = min(costs.values())
        for s in solvers:
            c = costs[s]
            if not math.isfinite(c):
                ratios[s].append(math.inf)
            elif c == best:
                ratios[s].append(1.0)
            else:
                ratios[s].append(c / best)
    if ratio_grid is None:
        finite = {v for vals in ratios.values() for v in vals if math.isfinite(v)}
        grid = np.array(sorted(finite | {1.0}))
    else:
        grid = np.asarray(ratio_grid, dtype=float)
    out = {}
    count = len(kept)
    for s in solvers:
        arr = np.asarray(ratios[s], dtype=float)
        frac = tuple(float(np.count_nonzero(arr <= t) / count) if count else 0.0 for t in grid)
        out[s] = ProfileCurve(s, "performance", eps, tuple(float(g) for g in grid), frac, count)
    return out
