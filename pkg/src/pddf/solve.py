"""One entry point for every solver in the package."""

from __future__ import annotations

from typing import Optional

from .baseline import ls_solve, refine, sals_solve
from .config import SolverConfig
from .pd_solver import SolveReport, sequential_penalty
from .problem import SeparableProblem, UsageError

__all__ = ["SOLVERS", "solve", "PARALLEL_WORKERS"]

SOLVERS = ("pddf", "pddf-parallel", "ls", "sals")
# Worker count used by "pddf-parallel" when none above 1 is configured.
PARALLEL_WORKERS = 12


def _workers(solver: str, cfg: SolverConfig, workers: Optional[int]) -> int:
    w = cfg.workers if workers is None else int(workers)
    if w < 1:
        raise UsageError("workers must be at least 1")
    if solver == "pddf-parallel" and w == 1:
        w = PARALLEL_WORKERS
    return w


def solve(
    p: SeparableProblem,
    solver: str = "pddf",
    cfg: SolverConfig = SolverConfig(),
    workers: Optional[int] = None,
) -> SolveReport:
    """Run ``solver`` on ``p`` with fresh evaluation counters.

    The penalty decomposition solvers are followed by an LS refinement from
    their final point when ``cfg.refine`` is set; the refinement continues
    the same evaluation counter.
    """
    if solver not in SOLVERS:
        raise UsageError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    if solver == "ls":
        return ls_solve(p, cfg=cfg.ls_config())
    if solver == "sals":
        return sals_solve(p, cfg=cfg.ls_config())
    counter = p.new_counter()
    rep = sequential_penalty(
        p,
        cfg.penalty_params(),
        cfg.search_config(),
        workers=_workers(solver, cfg, workers),
        counter=counter,
    )
    if cfg.refine:
        rep = refine(p, rep.final_x, cfg.refine_config(), counter, prior=rep, structured=cfg.refine_structured)
    return rep
