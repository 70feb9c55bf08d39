"""Penalty decomposition derivative-free optimization for partially separable sums."""

from .baseline import LsConfig, ls_solve, refine, sals_solve
from .config import SolverConfig, apply_overrides, load_config
from .dfsearch import SearchConfig, SearchOutcome, df_search
from .pd_solver import (
    PenaltyParams,
    PenaltyState,
    SolveReport,
    dfam,
    feasibility_gap,
    inner_stop,
    penalty_grad_x,
    penalty_value,
    sequential_penalty,
    stationarity_residual,
    x_update,
)
from .problem import (
    Box,
    CustomRegion,
    EvalCounter,
    EvaluationError,
    SeparableProblem,
    SubFunction,
    Unbounded,
    UsageError,
    affected_blocks,
    coverage_counts,
    evaluate_full,
    evaluate_sub,
    make_problem,
    project,
)
from .solve import SOLVERS, solve

__version__ = "0.1.0"
