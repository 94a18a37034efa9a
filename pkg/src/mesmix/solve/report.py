"""JSON view of a solution: schedules, storage trajectory, market trades, objectives."""

from __future__ import annotations

from ..mip.program import MipProgram
from .core import Solution

SCHEMA_VERSION = "1.0"


def _round(x: float) -> float:
    return float(f"{x:.10g}")


def solution_json(solution: Solution, program: MipProgram) -> dict:
    series: dict[str, dict[str, list[float]]] = {"status": {}, "storage_level": {}, "purchase": {}, "sale": {}}
    if solution.values:
        for v in program.variables:
            if v.family in series and not v.name.startswith(("startup", "shutdown")):
                series[v.family].setdefault(v.owner, []).append(_round(solution.values[v.name]))
    return {
        "schema_version": SCHEMA_VERSION,
        "status": solution.status.value,
        "backend": solution.backend,
        "objective_vector": [_round(f) for f in solution.objective_vector] if solution.values else None,
        "stages": [
            {"stage": s.index, "optimum": _round(s.optimum), "cap": _round(s.cap)} for s in solution.stages
        ],
        "schedules": series["status"],
        "storage_levels": series["storage_level"],
        "purchases": series["purchase"],
        "sales": series["sale"],
    }
