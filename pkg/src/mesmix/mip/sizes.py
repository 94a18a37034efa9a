"""Graph and program size bookkeeping for paired Model A / Model B builds."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Union

from ..model_a import ModelAGraph
from ..model_b import ModelBGraph
from ..network import Balance, Demand, GeneratingUnit, Market, NetworkGraph, Storage
from .program import FLOW_FAMILIES, MipProgram


@dataclass(frozen=True)
class SizeReport:
    nodes: int
    arcs: int
    containers: int
    info_nodes: int
    info_arcs: int
    subcomponents: int
    eliminated_curves: int
    eliminated_breakpoints: tuple[int, ...]
    variables: int
    constraints: int
    flow_variables: int
    binaries: int
    steps: int

    @property
    def breakpoints_per_curve(self) -> float:
        pts = self.eliminated_breakpoints
        return sum(pts) / len(pts) if pts else 0.0

    def to_json(self) -> dict:
        out = asdict(self)
        out["eliminated_breakpoints"] = list(self.eliminated_breakpoints)
        out["breakpoints_per_curve"] = self.breakpoints_per_curve
        return out


def size_report(program: MipProgram, graph: Union[ModelAGraph, ModelBGraph]) -> SizeReport:
    base = graph.base
    if isinstance(graph, ModelAGraph):
        containers = len(base.containers)
        info_nodes, info_arcs, subs = graph.info_nodes, graph.info_arcs, graph.subcomponents
        eliminated: tuple[int, ...] = ()
    else:
        containers, info_nodes, info_arcs, subs = 0, 0, 0, 0
        eliminated = graph.eliminated_curves
    counts = program.family_counts()
    return SizeReport(
        nodes=len(base.nodes),
        arcs=len(base.arcs),
        containers=containers,
        info_nodes=info_nodes,
        info_arcs=info_arcs,
        subcomponents=subs,
        eliminated_curves=len(eliminated),
        eliminated_breakpoints=tuple(eliminated),
        variables=program.n,
        constraints=program.m,
        flow_variables=sum(counts.get(f, 0) for f in FLOW_FAMILIES),
        binaries=len(program.binaries),
        steps=int(program.info.get("steps", base.grid.step_count)),
    )


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float
    relation: str  # "=" or ">="

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.slack == 0 if self.relation == "=" else self.slack >= 0

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "relation": self.relation,
                "slack": self.slack, "holds": self.holds}


def paired_identities(a: SizeReport, b: SizeReport) -> list[IdentityCheck]:
    """The published size relations, evaluated literally (counts per step scaled by |T|).

    ``eliminated_breakpoints`` lets curves with different breakpoint counts
    contribute their own ``rho``; with a common ``rho`` the sums reduce to
    ``2 mu (rho - 1)`` and ``mu (2 rho - 1)``.
    """
    T = a.steps
    pwl_vars = sum(2 * (r - 1) for r in b.eliminated_breakpoints)
    pwl_rows = sum(2 * r - 1 for r in b.eliminated_breakpoints)
    extra = 2 * a.containers + a.subcomponents
    return [
        IdentityCheck("variables", a.variables, b.variables + T * (2 * a.arcs + pwl_vars), "="),
        IdentityCheck("constraints", a.constraints, b.constraints + T * (a.arcs + pwl_rows), "="),
        IdentityCheck("flow_ratio", a.flow_variables, 2 * b.flow_variables, "="),
        IdentityCheck("graph_nodes", a.nodes, b.nodes + extra + a.info_nodes, ">="),
        IdentityCheck("graph_arcs", a.arcs, b.arcs + extra + a.info_arcs, ">="),
        IdentityCheck("variables_lower", a.variables,
                      b.variables + T * (2 * (b.arcs + extra + a.info_arcs) + pwl_vars), ">="),
        IdentityCheck("constraints_lower", a.constraints,
                      b.constraints + T * (b.arcs + extra + a.info_arcs + pwl_rows), ">="),
    ]


@dataclass(frozen=True)
class PredictedSize:
    variables: int
    constraints: int
    flow_variables: int


def predict_size(g: NetworkGraph, mode: str, extras: bool = False) -> PredictedSize:
    """Closed-form program size from graph structure alone (no compilation).

    Used as an independent oracle for the compiler's row and column counts.
    """
    T = g.grid.step_count
    flows = (2 if mode == "port" else 1) * len(g.arcs)
    n = flows
    m = len(g.arcs) if mode == "port" else 0
    if mode == "port" and extras:
        m += sum(2 for a in g.arcs if a.info is None and a.capacity is not None)
    ramp_rows = 0
    for v, node in g.nodes.items():
        if isinstance(node, GeneratingUnit):
            rhos = [c.curve.breakpoints for c in node.conversions]
            n += 3 + sum(2 * (r - 1) for r in rhos)
            m += sum(2 * r - 1 for r in rhos) + 1 + 6
            m += (node.min_up >= 2) + (node.min_down >= 2)
            per_output = (node.ramp_up is not None) + (node.ramp_down is not None)
            ramp_rows += per_output * len(node.output_resources) * (T - 1)
        elif isinstance(node, Storage):
            n += 1
            m += 1
        elif isinstance(node, Market):
            buys = any(a.resource == node.resource for a in g.out_arcs(v))
            sells = any(a.resource == node.resource for a in g.in_arcs(v))
            n += buys + sells
            m += buys + sells
        elif isinstance(node, Demand):
            m += 1
        elif isinstance(node, Balance):
            m += len({a.resource for a in g.in_arcs(v)} | {a.resource for a in g.out_arcs(v)})
    m += sum(1 for a in g.arcs if a.info is not None and a.info.term != "aggregate")
    return PredictedSize(n * T, m * T + ramp_rows, flows * T)
