"""Allocation model: objective terms, the explicit MILP and three exact solvers."""
from .bb import SolverError, solve_bb
from .count_dp import (
    EXHAUSTIVE_LIMIT,
    SearchSpaceTooLarge,
    search_space_size,
    solve_count_dp,
    solve_exhaustive,
)
from .lp import LPError, LPResult, solve_lp
from .objective import (
    AllocationDecision,
    Direction,
    InfeasibleCountsError,
    SolveConfig,
    SolveStatus,
    decision_gain,
    keep_current,
    make_decision,
    realize_counts,
    rescaling_cost,
    stay_objective,
    total_gain,
)
from .problem import MilpProblem, build_milp, to_lp_format

__all__ = [
    "AllocationDecision", "Direction", "SolveConfig", "SolveStatus", "MilpProblem",
    "InfeasibleCountsError", "SearchSpaceTooLarge", "SolverError", "LPError", "LPResult",
    "EXHAUSTIVE_LIMIT", "build_milp", "to_lp_format", "solve_bb", "solve_count_dp",
    "solve_exhaustive", "search_space_size", "solve_lp", "realize_counts",
    "rescaling_cost", "decision_gain", "keep_current", "make_decision",
    "stay_objective", "total_gain",
]
