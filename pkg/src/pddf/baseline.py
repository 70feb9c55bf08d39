"""Coordinate line-search baselines on the original (undecomposed) problem.

``ls_solve`` repeats box-feasible :func:`~pddf.dfsearch.df_search` sweeps on
the full objective, paying ``m`` sub-evaluations per trial point.
``sals_solve`` runs the very same sweeps but re-evaluates only the blocks
that contain the coordinate being moved, reading the other terms from a
cache; its iterates and objective values are bitwise identical to LS.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray

from .dfsearch import SearchConfig, df_search
from .pd_solver import SolveReport, TraceRow
from .problem import (
    Box,
    CustomRegion,
    EvalCounter,
    EvaluationError,
    SeparableProblem,
    UsageError,
    affected_blocks,
    evaluate_full,
    evaluate_sub,
)

__all__ = ["LsConfig", "SubValueCache", "ls_solve", "sals_solve", "refine"]


@dataclass(frozen=True)
class LsConfig:
    gamma: float = 1e-6
    theta: float = 0.5
    stop_alpha: float = 1e-4
    wall_clock_limit: Optional[float] = 600.0
    max_expansions: int = 50
    max_sweeps: Optional[int] = None

    def __post_init__(self):
        if not self.stop_alpha > 0:
            raise UsageError("stop_alpha must be positive")

    def search_config(self, p: SeparableProblem) -> SearchConfig:
        cfg = SearchConfig(self.gamma, self.theta, self.max_expansions)
        if isinstance(p.region, Box):
            lo, hi = p.region.bounds(p.n)
            cfg = cfg.with_bounds(lo, hi)
        return cfg


class SubValueCache:
    """Sub-function values at a reference point of the structured search."""

    def __init__(self, x: NDArray, values: List[float]):
        self.x = x
        self.values = list(values)
        self.valid = [True] * len(values)

    def total(self) -> float:
        # Same summation order as evaluate_full, so totals agree bitwise.
        s = 0.0
        for v in self.values:
            s += v
        return s


class _FullOracle:
    def __init__(self, p: SeparableProblem, counter: EvalCounter, history: list):
        self.p = p
        self.counter = counter
        self.history = history

    def _note(self, f: float) -> float:
        if math.isfinite(f) and (not self.history or f < self.history[-1][1]):
            self.history.append((self.counter.total, f))
        return f

    def __call__(self, x: NDArray) -> float:
        return self._note(evaluate_full(self.p, x, self.counter))


class _StructuredOracle(_FullOracle):
    """Full objective assembled from cached terms plus the affected blocks.

    Every trial of a coordinate sweep differs from the current base point in
    one coordinate; when the base has moved (an accepted step), it is found
    among the trials of the previous coordinate.
    """

    def __init__(self, p, counter, history):
        super().__init__(p, counter, history)
        self.base: Optional[SubValueCache] = None
        self.trials: List[SubValueCache] = []
        self.coord = -1

    def _full(self, x: NDArray) -> SubValueCache:
        vals = [evaluate_sub(self.p, j, x[b], self.counter) for j, b in enumerate(self.p.blocks)]
        return SubValueCache(x.copy(), vals)

    def __call__(self, x: NDArray) -> float:
        if self.base is None:
            self.base = self._full(x)
            return self._note(self.base.total())
        diff = np.flatnonzero(x != self.base.x)
        if diff.size == 0:
            return self.base.total()
        if diff.size > 1:
            for t in reversed(self.trials):
                if np.count_nonzero(x != t.x) <= 1:
                    self.base = t
                    break
            else:
                self.base = None
                self.trials = []
                self.coord = -1
                return self(x)
            self.trials = []
            diff = np.flatnonzero(x != self.base.x)
            if diff.size == 0:
                return self.base.total()
        i = int(diff[0])
        if i != self.coord:
            self.trials = []
            self.coord = i
        ref = self.base
        entry = SubValueCache(x.copy(), ref.values)
        for j in affected_blocks(self.p, i):
            entry.values[j] = evaluate_sub(self.p, j, x[self.p.blocks[j]], self.counter)
        self.trials.append(entry)
        return self._note(entry.total())


def _coordinate_search(
    p: SeparableProblem,
    x0: Optional[NDArray],
    cfg: LsConfig,
    counter: Optional[EvalCounter],
    structured: bool,
) -> SolveReport:
    t_start = time.monotonic()
    if isinstance(p.region, CustomRegion):
        raise UsageError("coordinate line search supports boxes and unbounded regions only")
    counter = p.new_counter() if counter is None else counter
    x = np.array(p.x0 if x0 is None else x0, dtype=float)
    if x.shape != (p.n,):
        raise UsageError(f"start point has shape {x.shape}, expected ({p.n},)")
    if not p.region.contains(x):
        raise UsageError("start point is infeasible")
    scfg = cfg.search_config(p)
    history: list = []
    oracle = (_StructuredOracle if structured else _FullOracle)(p, counter, history)

    f = oracle(x)
    if not math.isfinite(f):
        raise EvaluationError(f"objective is not finite at the starting point (f={f})")
    f0 = f
    alpha = np.ones(p.n)
    deadline = None if cfg.wall_clock_limit is None else t_start + cfg.wall_clock_limit
    trace: List[TraceRow] = []
    accepted = 0
    sweeps = 0
    termination = "stepsize"
    while True:
        out = df_search(oracle, x, alpha, scfg, value=f)
        x, alpha, f = out.point, out.stepsizes, out.value
        accepted += int(np.count_nonzero(out.accepted))
        sweeps += 1
        trace.append(TraceRow(sweeps, math.nan, 0, counter.total, f, math.nan, 0.0))
        if float(np.max(alpha)) <= cfg.stop_alpha:
            break
        if cfg.max_sweeps is not None and sweeps >= cfg.max_sweeps:
            termination = "max_outer"
            break
        if deadline is not None and time.monotonic() > deadline:
            termination = "wall_clock"
            break

    return SolveReport(
        final_x=x,
        final_f=f,
        history=history,
        termination=termination,
        outer_iters=sweeps,
        evals=counter.snapshot(),
        solver="sals" if structured else "ls",
        trace=trace,
        wall_time=time.monotonic() - t_start,
        f0=f0,
        accepted_steps=accepted,
        ls_stepsizes=alpha,
    )


def ls_solve(
    p: SeparableProblem,
    x0: Optional[NDArray] = None,
    cfg: LsConfig = LsConfig(),
    c: Optional[EvalCounter] = None,
) -> SolveReport:
    """Derivative-free coordinate search with extrapolation (LS)."""
    return _coordinate_search(p, x0, cfg, c, structured=False)


def sals_solve(
    p: SeparableProblem,
    x0: Optional[NDArray] = None,
    cfg: LsConfig = LsConfig(),
    c: Optional[EvalCounter] = None,
) -> SolveReport:
    """Structure-aware LS: same iterates as :func:`ls_solve`, fewer sub-evaluations."""
    return _coordinate_search(p, x0, cfg, c, structured=True)


def refine(
    p: SeparableProblem,
    x_pd: NDArray,
    cfg: LsConfig = LsConfig(),
    c: Optional[EvalCounter] = None,
    prior: Optional[SolveReport] = None,
    structured: bool = False,
) -> SolveReport:
    """Polish ``x_pd`` with LS (or SALS) and append to ``prior``'s history.

    ``c`` should be the counter the prior run charged, so that the combined
    history lies on one continuous evaluation axis.
    """
    if c is None:
        c = p.new_counter() if prior is None else prior.evals.snapshot()
    rep = _coordinate_search(p, x_pd, cfg, c, structured)
    if prior is None:
        return replace(rep, termination="refined")
    history = list(prior.history)
    for e, f in rep.history:
        if not history or f < history[-1][1]:
            history.append((e, f))
    return replace(
        prior,
        final_x=rep.final_x,
        final_f=rep.final_f,
        history=history,
        termination="refined",
        evals=rep.evals,
        wall_time=prior.wall_time + rep.wall_time,
        accepted_steps=rep.accepted_steps,
        ls_stepsizes=rep.ls_stepsizes,
        trace=prior.trace + rep.trace,
    )
