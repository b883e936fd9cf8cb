"""Augmented-Lagrangian NLP solver and the two-phase co-optimization driver."""

from .auglag import (
    FEASIBLE,
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    STATUSES,
    SolverOptions,
    SolveResult,
    kkt_residual,
    solve_nlp,
)
from .driver import co_optimize, find_feasible

__all__ = [
    "FEASIBLE",
    "INFEASIBLE",
    "ITERATION_LIMIT",
    "OPTIMAL",
    "STATUSES",
    "SolverOptions",
    "SolveResult",
    "co_optimize",
    "find_feasible",
    "kkt_residual",
    "solve_nlp",
]
