"""Post-compilation checks that do not trust the compiler or the solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..network import Balance, Demand, GeneratingUnit, Market, NetworkGraph, ObjectiveNode, Storage
from .program import MipProgram


def required_families(g: NetworkGraph, v: str, mode: str) -> set[str]:
    node = g.nodes[v]
    if isinstance(node, GeneratingUnit):
        out = {"conversion", "activation", "capacity"}
        if node.min_up >= 2:
            out.add("min_up")
        if node.min_down >= 2:
            out.add("min_down")
        if g.grid.step_count > 1:
            if node.ramp_up is not None:
                out.add("ramp_up")
            if node.ramp_down is not None:
                out.add("ramp_down")
        return out
    if isinstance(node, Storage):
        return {"storage"}
    if isinstance(node, ObjectiveNode):
        return set()
    if isinstance(node, Market):
        return {"balance"} if (g.in_arcs(v) or g.out_arcs(v)) else set()
    if isinstance(node, (Balance, Demand)):
        return {"balance"}
    return set()


@dataclass(frozen=True)
class CoverageGap:
    subject: str
    family: str

    def __str__(self) -> str:
        return f"{self.subject} lacks {self.family}"


def audit_families(program: MipProgram, g: NetworkGraph) -> list[CoverageGap]:
    """Every node (and, in port mode, every arc) must own the rows its kind requires."""
    mode = program.info.get("mode", "arc")
    present: dict[str, set[str]] = {}
    for c in program.constraints:
        present.setdefault(c.origin, set()).add(c.family)
    gaps = []
    for v in g.nodes:
        for fam in sorted(required_families(g, v, mode) - present.get(v, set())):
            gaps.append(CoverageGap(v, fam))
    if mode == "port":
        for a in g.arcs:
            if "arc_identity" not in present.get(a.id, set()):
                gaps.append(CoverageGap(a.id, "arc_identity"))
    return gaps


@dataclass(frozen=True)
class Infeasibility:
    item: str
    amount: float


def check_feasibility(program: MipProgram, values: Mapping[str, float], tol: float = 1e-7,
                      int_tol: float = 1e-6) -> list[Infeasibility]:
    """Evaluate every row and bound directly from the stored coefficients."""
    bad = []
    for v in program.variables:
        x = values.get(v.name)
        if x is None:
            bad.append(Infeasibility(f"missing {v.name}", float("inf")))
            continue
        if x < v.lo - tol or x > v.hi + tol:
            bad.append(Infeasibility(f"bound {v.name}", max(v.lo - x, x - v.hi)))
        if v.binary and min(abs(x), abs(x - 1)) > int_tol:
            bad.append(Infeasibility(f"integrality {v.name}", min(abs(x), abs(x - 1))))
    if bad:
        return bad
    for i, c in enumerate(program.constraints):
        amount = c.violation(values)
        if amount > tol:
            bad.append(Infeasibility(f"row {i} {c.family}:{c.origin}:{c.t}", amount))
    return bad
