"""Builtin exact solver, lexicographic driver and brute-force oracle."""

from .core import (
    BRUTE_FORCE_CAP,
    Solution,
    SolveConfig,
    StageRecord,
    Status,
    brute_force,
    solve_lexicographic,
    solve_lp,
    solve_mip,
)
from .report import solution_json

__all__ = [
    "BRUTE_FORCE_CAP", "Solution", "SolveConfig", "StageRecord", "Status", "brute_force",
    "solution_json", "solve_lexicographic", "solve_lp", "solve_mip",
]
