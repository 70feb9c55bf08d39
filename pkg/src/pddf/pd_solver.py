"""Penalty decomposition derivative-free solver (PDDF).

Every block ``S_j`` gets a private copy ``y_j`` of ``x[S_j]`` and the
consistency constraints ``x[S_j] = y_j`` are moved into the quadratic penalty

    P_tau(x, y) = sum_j f_j(y_j) + tau/2 * sum_j ||x[S_j] - y_j||**2.

For a fixed ``tau`` the copies are improved block by block with
:func:`~pddf.dfsearch.df_search` (blocks are independent and may run on
worker threads) and ``x`` is then set to the exact minimizer of the penalty,
i.e. the projected per-coordinate centroid of the copies.  An outer loop
drives ``tau`` up geometrically.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .dfsearch import SearchConfig, df_search
from .problem import (
    Box,
    EvalCounter,
    EvaluationError,
    SeparableProblem,
    Unbounded,
    UsageError,
    coverage_counts,
    evaluate_sub,
)

__all__ = [
    "PenaltyParams",
    "PenaltyState",
    "InnerRecord",
    "DfamResult",
    "SolveReport",
    "tau_schedule",
    "penalty_value",
    "penalty_grad_x",
    "x_update",
    "x_update_is_exact",
    "stationarity_residual",
    "inner_stop",
    "feasibility_gap",
    "initial_state",
    "dfam",
    "sequential_penalty",
]

logger = logging.getLogger(__name__)

TERMINATIONS = ("outer_step_tol", "max_outer", "wall_clock", "refined", "stepsize", "error")


@dataclass(frozen=True)
class PenaltyParams:
    """Outer-loop parameters; defaults are the values used in the experiments."""

    tau0: float = 1.0
    tau_growth: float = 1.1
    tau_cap: float = 1e8
    xi: float = 1e-2
    xi_schedule: str = "constant"
    xi_decay: float = 0.9
    outer_step_tol: float = 1e-2
    feas_tol: Optional[float] = 1e-3
    max_outer: int = 100
    wall_clock_limit: Optional[float] = 600.0
    inner_cap: Optional[int] = None
    constrain_blocks: bool = True

    def __post_init__(self):
        if not self.tau0 > 0:
            raise UsageError("tau0 must be positive")
        if not self.tau_growth > 1:
            raise UsageError("tau_growth must exceed 1")
        if not self.tau_cap >= self.tau0:
            raise UsageError("tau_cap must be at least tau0")
        if not self.xi > 0:
            raise UsageError("xi must be positive")
        if self.xi_schedule not in ("constant", "decreasing"):
            raise UsageError("xi_schedule must be 'constant' or 'decreasing'")
        if int(self.max_outer) < 1:
            raise UsageError("max_outer must be at least 1")

    def xi_at(self, k: int) -> float:
        if self.xi_schedule == "constant":
            return self.xi
        return self.xi * self.xi_decay**k


def tau_schedule(params: PenaltyParams, k: int) -> float:
    """``tau_k`` from ``tau_0`` and ``tau_{k+1} = min(growth * tau_k, cap)``."""
    tau = params.tau0
    for _ in range(k):
        tau = min(params.tau_growth * tau, params.tau_cap)
    return tau


@dataclass
class PenaltyState:
    """Iterate ``(x, y_1..y_m)`` together with per-block tentative stepsizes.

    ``fvals[j]`` caches ``f_j(ys[j])`` when known so that penalty values can
    be formed without new oracle calls.
    """

    x: NDArray[np.float64]
    ys: List[NDArray[np.float64]]
    tau: float
    stepsizes: List[NDArray[np.float64]]
    blocks: Sequence[NDArray[np.intp]]
    fvals: Optional[List[float]] = None

    def copy(self) -> "PenaltyState":
        return PenaltyState(
            self.x.copy(),
            [y.copy() for y in self.ys],
            self.tau,
            [a.copy() for a in self.stepsizes],
            self.blocks,
            None if self.fvals is None else list(self.fvals),
        )


def _pen(xs: NDArray, y: NDArray, tau: float) -> float:
    d = xs - y
    return 0.5 * tau * float(np.dot(d, d))


def _penalty_known(s: PenaltyState, x: Optional[NDArray] = None, tau: Optional[float] = None) -> float:
    x = s.x if x is None else x
    tau = s.tau if tau is None else tau
    total = 0.0
    for fj, y, b in zip(s.fvals, s.ys, s.blocks):
        total += fj + _pen(x[b], y, tau)
    return total


def penalty_value(s: PenaltyState, p: SeparableProblem, c: EvalCounter) -> float:
    """``P_tau(x, y)`` with all ``m`` sub-functions evaluated (and counted)."""
    total = 0.0
    for j, (y, b) in enumerate(zip(s.ys, s.blocks)):
        total += evaluate_sub(p, j, y, c) + _pen(s.x[b], y, s.tau)
    return total


def penalty_grad_x(s: PenaltyState) -> NDArray[np.float64]:
    """Analytic ``grad_x P``; involves only the penalty terms, no oracle calls."""
    g = np.zeros_like(s.x)
    for y, b in zip(s.ys, s.blocks):
        g[b] += s.x[b] - y
    return s.tau * g


def _centroid(ys: Sequence[NDArray], blocks: Sequence[NDArray], cov: NDArray) -> NDArray:
    acc = np.zeros(cov.size)
    for y, b in zip(ys, blocks):
        acc[b] += y
    return acc / cov


def x_update_is_exact(region, cov: NDArray) -> bool:
    """Whether projecting the centroid is the exact x-minimizer for ``region``."""
    if isinstance(region, (Box, Unbounded)):
        return True
    return bool(np.all(cov == cov[0]))


def x_update(
    ys: Sequence[NDArray],
    tau: float,
    region,
    cov: NDArray,
    blocks: Sequence[NDArray],
) -> NDArray[np.float64]:
    """Minimize ``P_tau(., ys)`` over the region.

    The minimizer does not depend on ``tau``.  For boxes the weighted
    quadratic separates and clipping the centroid is exact; for a custom
    region with uneven coverage the projected centroid is only a surrogate
    (see :func:`x_update_is_exact`).
    """
    if np.any(cov < 1):
        raise UsageError("every coordinate must be covered by a block")
    return np.asarray(region.project(_centroid(ys, blocks, cov)), dtype=float)


def stationarity_residual(x: NDArray, g: NDArray, region) -> float:
    """Projected-gradient residual ``||x - proj(x - g)||``."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - region.project(x - np.asarray(g, dtype=float))))


def max_stepsize(s: PenaltyState) -> float:
    return max(float(np.max(a)) for a in s.stepsizes)


def inner_stop(s: PenaltyState, xi_k: float, region) -> bool:
    """Both inner termination clauses.

    Tentative stepsizes must all be ``<= xi_k / max(tau, 1)`` and the
    projected-gradient residual of ``x`` w.r.t. ``grad_x P`` must be ``<= xi_k``.
    """
    if max_stepsize(s) > xi_k / max(s.tau, 1.0):
        return False
    return stationarity_residual(s.x, penalty_grad_x(s), region) <= xi_k


def feasibility_gap(s: PenaltyState) -> float:
    """``max_j ||x[S_j] - y_j||_inf``."""
    return max(float(np.max(np.abs(s.x[b] - y))) for y, b in zip(s.ys, s.blocks))


def initial_state(p: SeparableProblem, x: NDArray, tau: float, fvals: Optional[List[float]] = None) -> PenaltyState:
    x = np.array(x, dtype=float)
    blocks = p.blocks
    return PenaltyState(
        x=x,
        ys=[x[b].copy() for b in blocks],
        tau=tau,
        stepsizes=[np.ones(b.size) for b in blocks],
        blocks=blocks,
        fvals=fvals,
    )


@dataclass
class InnerRecord:
    """Diagnostics of one inner iteration.

    ``p_start``, ``p_searched`` and ``p_updated`` are the penalty values at
    ``(x^l, y^l)``, ``(x^l, y^{l+1})`` and ``(x^{l+1}, y^{l+1})``; the last is
    NaN on the iteration that triggers termination.
    """

    ell: int
    p_start: float
    p_searched: float
    p_updated: float
    evals: int
    expansions: int
    max_stepsize: float
    stopped: bool = False


@dataclass
class DfamResult:
    state: PenaltyState
    inner_iters: int
    records: List[InnerRecord] = field(default_factory=list)
    capped: bool = False
    timed_out: bool = False


class _LocalCount:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0

    def add(self, j, k=1):
        self.n += k


def _block_configs(p: SeparableProblem, cfg: SearchConfig, constrain: bool) -> list:
    bounds = p.region.bounds(p.n) if isinstance(p.region, Box) else None
    if bounds is None or not constrain:
        base = cfg.unbounded()
        return [base] * p.m
    lo, hi = bounds
    return [cfg.with_bounds(lo[b], hi[b]) for b in p.blocks]


def dfam(
    p: SeparableProblem,
    start: PenaltyState,
    tau_k: float,
    xi_k: float,
    cfg: SearchConfig = SearchConfig(),
    workers: int = 1,
    counter: Optional[EvalCounter] = None,
    *,
    executor: Optional[ThreadPoolExecutor] = None,
    deadline: Optional[float] = None,
    inner_cap: Optional[int] = None,
    constrain_blocks: bool = True,
) -> DfamResult:
    """Alternate derivative-free block searches and exact x-updates at fixed ``tau_k``.

    Stepsizes are reset to one on entry.  Termination is checked right after
    the block searches; the returned state is the iterate those searches
    started from, paired with the freshly updated stepsizes.
    """
    counter = p.new_counter() if counter is None else counter
    blocks = p.blocks
    cov = coverage_counts(p)
    cfgs = _block_configs(p, cfg, constrain_blocks)
    inner_cap = inner_cap if inner_cap is not None else 10 * p.n * p.m

    s = start.copy()
    s.tau = tau_k
    s.stepsizes = [np.ones(b.size) for b in blocks]
    if s.fvals is None:
        s.fvals = [evaluate_sub(p, j, y, counter) for j, y in enumerate(s.ys)]

    own_executor = None
    if executor is None and workers > 1:
        own_executor = executor = ThreadPoolExecutor(max_workers=workers)

    records: List[InnerRecord] = []
    capped = timed_out = False
    ell = 0
    try:
        while True:
            x = s.x

            def search(j, x=x, s=s):
                local = _LocalCount()
                seen = {}
                xs = x[blocks[j]]

                def g(w):
                    f = evaluate_sub(p, j, w, local)
                    seen[w.tobytes()] = f
                    return f + _pen(xs, w, tau_k)

                base = s.fvals[j] + _pen(xs, s.ys[j], tau_k)
                out = df_search(g, s.ys[j], s.stepsizes[j], cfgs[j], value=base)
                moved = bool(np.any(out.accepted != 0))
                fnew = seen[out.point.tobytes()] if moved else s.fvals[j]
                return out, fnew, local.n

            if executor is None:
                results = [search(j) for j in range(p.m)]
            else:
                results = list(executor.map(search, range(p.m)))

            evals = 0
            expansions = 0
            for j, (out, _, k) in enumerate(results):
                if k:
                    counter.add(j, k)
                evals += k
                expansions += out.expansions
            p_start = sum(out.base_value for out, _, _ in results)
            p_searched = sum(out.value for out, _, _ in results)
            new_steps = [out.stepsizes for out, _, _ in results]

            probe = PenaltyState(s.x, s.ys, tau_k, new_steps, blocks, s.fvals)
            if inner_stop(probe, xi_k, p.region):
                records.append(
                    InnerRecord(ell, p_start, p_searched, math.nan, evals, expansions, max_stepsize(probe), True)
                )
                s = probe
                ell += 1
                break

            ys = [out.point for out, _, _ in results]
            fvals = [f for _, f, _ in results]
            x_new = x_update(ys, tau_k, p.region, cov, blocks)
            s = PenaltyState(x_new, ys, tau_k, new_steps, blocks, fvals)
            p_updated = _penalty_known(s)
            records.append(
                InnerRecord(ell, p_start, p_searched, p_updated, evals, expansions, max_stepsize(s))
            )
            ell += 1
            if ell >= inner_cap:
                capped = True
                logger.warning("inner iteration cap %d reached at tau=%g", inner_cap, tau_k)
                break
            if deadline is not None and time.monotonic() > deadline:
                timed_out = True
                break
    finally:
        if own_executor is not None:
            own_executor.shutdown()

    return DfamResult(s, ell, records, capped, timed_out)


@dataclass
class TraceRow:
    k: int
    tau: float
    inner_iters: int
    sub_evals: int
    f: float
    residual: float
    feas_gap: float

    FIELDS = ("k", "tau", "inner_iters", "sub_evals", "f", "residual", "feas_gap")

    def as_tuple(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass
class SolveReport:
    """Outcome of a solver run.

    ``history`` holds ``(cumulative sub-evaluations, best f so far)`` pairs
    recorded at points whose objective value was actually computed.
    ``stop_states`` pairs each ``xi_k`` with the state returned by an inner
    loop that met its stopping test.
    """

    final_x: NDArray[np.float64]
    final_f: float
    history: List[tuple]
    termination: str
    outer_iters: int
    evals: EvalCounter
    solver: str = "pddf"
    trace: List[TraceRow] = field(default_factory=list)
    wall_time: float = 0.0
    final_state: Optional[PenaltyState] = None
    inner_records: List[List[InnerRecord]] = field(default_factory=list)
    level_values: List[float] = field(default_factory=list)
    f0: float = math.nan
    inexact_xupdate: bool = False
    inner_capped: int = 0
    accepted_steps: int = 0
    ls_stepsizes: Optional[NDArray[np.float64]] = None
    stop_states: List[tuple] = field(default_factory=list, repr=False)

    @property
    def best_f(self) -> float:
        return self.history[-1][1] if self.history else math.nan


def _record(history: list, evals: int, f: float) -> None:
    if not history:
        history.append((evals, f))
    elif f < history[-1][1]:
        history.append((evals, f))


def sequential_penalty(
    p: SeparableProblem,
    params: PenaltyParams = PenaltyParams(),
    cfg: SearchConfig = SearchConfig(),
    workers: int = 1,
    counter: Optional[EvalCounter] = None,
    on_outer: Optional[Callable[[TraceRow], None]] = None,
) -> SolveReport:
    """Sequential penalty loop with warm starts.

    Each subproblem starts from the previous solution when its penalty value
    at the new ``tau`` does not exceed ``f(x0)``, and from ``(x0, x0[S_j])``
    otherwise.
    """
    t_start = time.monotonic()
    deadline = None if params.wall_clock_limit is None else t_start + params.wall_clock_limit
    counter = p.new_counter() if counter is None else counter
    x0 = np.array(p.x0, dtype=float)
    if not p.region.contains(x0):
        raise UsageError("x0 is infeasible")

    f0_parts = [evaluate_sub(p, j, x0[b], counter) for j, b in enumerate(p.blocks)]
    f0 = 0.0
    for v in f0_parts:
        f0 += v
    if not math.isfinite(f0):
        raise EvaluationError(f"objective is not finite at the starting point (f={f0})")
    history: list = []
    _record(history, counter.total, f0)

    cov = coverage_counts(p)
    inexact = not x_update_is_exact(p.region, cov)
    if inexact:
        logger.warning("x-update uses the projected centroid as an inexact surrogate")

    origin = initial_state(p, x0, params.tau0, list(f0_parts))
    prev = origin
    x_prev = x0
    termination = "max_outer"
    trace: List[TraceRow] = []
    all_records: List[List[InnerRecord]] = []
    stops: List[tuple] = []
    levels: List[float] = []
    capped = 0
    f_cur = f0
    k = 0

    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in range(1, int(params.max_outer) + 1):
            tau_k = tau_schedule(params, k)
            xi_k = params.xi_at(k)
            start = prev if _penalty_known(prev, tau=tau_k) <= f0 else origin
            res = dfam(
                p,
                start,
                tau_k,
                xi_k,
                cfg,
                workers,
                counter,
                executor=executor,
                deadline=deadline,
                inner_cap=params.inner_cap,
                constrain_blocks=params.constrain_blocks,
            )
            s = res.state
            all_records.append(res.records)
            levels.append(_penalty_known(s))
            capped += int(res.capped)
            if res.records and res.records[-1].stopped:
                stops.append((xi_k, s))

            f_cur = 0.0
            for j, b in enumerate(p.blocks):
                f_cur += evaluate_sub(p, j, s.x[b], counter)
            _record(history, counter.total, f_cur)
            row = TraceRow(
                k,
                tau_k,
                res.inner_iters,
                counter.total,
                f_cur,
                stationarity_residual(s.x, penalty_grad_x(s), p.region),
                feasibility_gap(s),
            )
            trace.append(row)
            if on_outer is not None:
                on_outer(row)

            step = float(np.linalg.norm(s.x - x_prev))
            prev = s
            x_prev = s.x
            small_gap = params.feas_tol is None or row.feas_gap <= params.feas_tol
            if step <= params.outer_step_tol and small_gap:
                termination = "outer_step_tol"
                break
            if res.timed_out or (deadline is not None and time.monotonic() > deadline):
                termination = "wall_clock"
                break
    finally:
        if executor is not None:
            executor.shutdown()

    return SolveReport(
        final_x=prev.x.copy(),
        final_f=f_cur,
        history=history,
        termination=termination,
        outer_iters=k,
        evals=counter.snapshot(),
        solver="pddf" if workers <= 1 else "pddf-parallel",
        trace=trace,
        wall_time=time.monotonic() - t_start,
        final_state=prev,
        inner_records=all_records,
        level_values=levels,
        f0=f0,
        inexact_xupdate=inexact,
        inner_capped=capped,
        stop_states=stops,
    )
