"""Paired Model A / Model B pipeline: build, reduce, compile, size, solve, compare."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import MesmixError
from .mip import (
    IdentityCheck,
    SizeReport,
    audit_families,
    check_feasibility,
    compile_graph,
    compile_model_a,
    compile_model_b,
    paired_identities,
    predict_size,
    size_report,
)
from .model_a import build_model_a
from .model_b import flatten
from .network import Bounds, NetworkGraph
from .solve import Solution, SolveConfig, solve_lexicographic

SCHEMA_VERSION = "1.0"
AGREEMENT_RTOL = 1e-6


class PipelineError(MesmixError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def vectors_agree(a, b, rtol: float = AGREEMENT_RTOL) -> bool:
    return all(abs(x - y) <= rtol * max(1.0, abs(x), abs(y)) for x, y in zip(a, b))


def reduction(a: float, b: float) -> float:
    return 1.0 - b / a if a else 0.0


@dataclass
class ComparisonReport:
    instance: str
    synthetic: bool
    size_a: SizeReport
    size_b: SizeReport
    identities: list[IdentityCheck]
    derived_checks: list[IdentityCheck]
    solution_a: Optional[Solution] = None
    solution_b: Optional[Solution] = None
    audit_gaps: dict[str, list[str]] = field(default_factory=dict)
    infeasibilities: dict[str, int] = field(default_factory=dict)

    @property
    def objectives_agree(self) -> bool:
        if self.solution_a is None or self.solution_b is None:
            return False
        return vectors_agree(self.solution_a.objective_vector, self.solution_b.objective_vector)

    @property
    def reductions(self) -> dict[str, float]:
        a, b = self.size_a, self.size_b
        return {
            "nodes": reduction(a.nodes, b.nodes),
            "arcs": reduction(a.arcs, b.arcs),
            "variables": reduction(a.variables, b.variables),
            "constraints": reduction(a.constraints, b.constraints),
        }

    def to_json(self) -> dict:
        def solved(s: Optional[Solution]):
            if s is None:
                return None
            return {
                "status": s.status.value,
                "objective_vector": [_r(v) for v in s.objective_vector],
                "stages": [{"stage": st.index, "optimum": _r(st.optimum), "cap": _r(st.cap)} for st in s.stages],
            }

        return {
            "schema_version": SCHEMA_VERSION,
            "instance": self.instance,
            "synthetic": self.synthetic,
            "sizes": {"a": self.size_a.to_json(), "b": self.size_b.to_json()},
            "reductions": {k: _r(v) for k, v in self.reductions.items()},
            "published_identities": [c.to_json() for c in self.identities],
            "derived_checks": [c.to_json() for c in self.derived_checks],
            "solutions": {"a": solved(self.solution_a), "b": solved(self.solution_b)},
            "objective_vectors_agree": self.objectives_agree if self.solution_a else None,
            "coverage_gaps": self.audit_gaps,
            "infeasibilities": self.infeasibilities,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _r(x: float) -> float:
    return float(f"{x:.10g}") if math.isfinite(x) else x


def derived_checks(g_a: NetworkGraph, g_b: NetworkGraph, prog_a, prog_b, extras: bool = False,
                   bounds: Optional[Bounds] = None) -> list[IdentityCheck]:
    """Exact size relations that hold by construction (see the decision ledger)."""
    T = g_b.grid.step_count
    pa, pb = predict_size(g_a, "port", extras), predict_size(g_b, "arc")
    port_b = compile_graph(g_b, "port", bounds=bounds)
    arc_b = prog_b
    arcs_b = len(g_b.arcs)
    flows = lambda p: sum(1 for v in p.variables if v.family.startswith("flow_"))  # noqa: E731
    return [
        IdentityCheck("predicted_variables_a", prog_a.n, pa.variables, "="),
        IdentityCheck("predicted_constraints_a", prog_a.m, pa.constraints, "="),
        IdentityCheck("predicted_variables_b", prog_b.n, pb.variables, "="),
        IdentityCheck("predicted_constraints_b", prog_b.m, pb.constraints, "="),
        IdentityCheck("same_graph_variables", port_b.n, arc_b.n + arcs_b * T, "="),
        IdentityCheck("same_graph_constraints", port_b.m, arc_b.m + arcs_b * T, "="),
        IdentityCheck("same_graph_flow_ratio", flows(port_b), 2 * flows(arc_b), "="),
    ]


def run_compare(graph: NetworkGraph, bounds: Bounds = Bounds(), config: Optional[SolveConfig] = None,
                solve: bool = True, extras: bool = False, synthetic: bool = False) -> ComparisonReport:
    def stage(name, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except MesmixError as exc:
            raise PipelineError(name, exc) from exc

    ma = stage("build", build_model_a, graph)
    mb = stage("reduce", flatten, ma)
    prog_a = stage("compile A", compile_model_a, ma, bounds=bounds, extras=extras)
    prog_b = stage("compile B", compile_model_b, mb, bounds=bounds)
    rep_a, rep_b = size_report(prog_a, ma), size_report(prog_b, mb)
    report = ComparisonReport(
        graph.name, synthetic, rep_a, rep_b, paired_identities(rep_a, rep_b),
        derived_checks(ma.base, mb.base, prog_a, prog_b, extras, bounds),
    )
    report.audit_gaps = {
        "a": [str(x) for x in audit_families(prog_a, ma.base)],
        "b": [str(x) for x in audit_families(prog_b, mb.base)],
    }
    if solve:
        cfg = config or SolveConfig()
        report.solution_a = stage("solve A", solve_lexicographic, prog_a, cfg)
        report.solution_b = stage("solve B", solve_lexicographic, prog_b, cfg)
        report.infeasibilities = {
            "a": len(check_feasibility(prog_a, report.solution_a.values)),
            "b": len(check_feasibility(prog_b, report.solution_b.values)),
        }
    return report
