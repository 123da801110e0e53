"""Numerical engines: interior-point convex solver, branch-and-bound, LP export."""

from .convex import ConvexProgram, ConvexSolution, SolveStatus, solve_convex
from .bnb import BnBNode, BnBResult, solve_bnb
from .lpfile import export_model, sched_ilp_lp, speed_ilp_lp

__all__ = [
    "BnBNode",
    "BnBResult",
    "ConvexProgram",
    "ConvexSolution",
    "SolveStatus",
    "export_model",
    "sched_ilp_lp",
    "solve_bnb",
    "solve_convex",
    "speed_ilp_lp",
]
