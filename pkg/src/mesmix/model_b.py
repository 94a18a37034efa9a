"""Flat, arc-based representation ("Model B") and the reduction pipeline.

``flatten`` walks a Model A graph down to Model B in four phases:

1. every container's boundary balance pair is contracted away,
2. each objective's information subgraph is dropped, its contributions kept
   as per-node metadata,
3. degree-two balance nodes are contracted until none is left,
4. admissible chains of units are merged, composing their curves.

Every phase appends :class:`ReductionStep` records that :func:`replay_log`
can apply to the Model A base graph to reproduce the Model B base graph.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import DomainMismatch, InvalidCurve, NotContractible, NotMergeable
from .model_a import INFO_RESOURCES, ModelAGraph, ObjectiveTerm, objective_terms
from .network import (
    Arc,
    Balance,
    Conversion,
    GeneratingUnit,
    NetworkGraph,
    Node,
    ResourceKind,
)
from .pwl import PiecewiseLinear, compose_pwl

STEP_KINDS = ("FlattenContainer", "DropInfoSubgraph", "ContractBalance", "MergeUnits")


@dataclass(frozen=True)
class ReductionStep:
    kind: str
    subject: str
    removed_nodes: tuple[str, ...] = ()
    removed_arcs: tuple[str, ...] = ()
    added_arcs: tuple[Arc, ...] = ()
    added_nodes: tuple[tuple[str, Node], ...] = ()
    removed_resources: tuple[str, ...] = ()
    metadata: tuple[ObjectiveTerm, ...] = ()

    @property
    def added_arc_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.added_arcs)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "subject": self.subject,
            "removed_nodes": list(self.removed_nodes),
            "removed_arcs": list(self.removed_arcs),
            "added_arcs": [
                {"id": a.id, "tail": a.tail, "head": a.head, "resource": a.resource, "capacity": a.capacity}
                for a in self.added_arcs
            ],
            "added_nodes": [v for v, _ in self.added_nodes],
            "removed_resources": list(self.removed_resources),
        }


@dataclass(frozen=True)
class ModelBGraph:
    base: NetworkGraph
    merged_units: dict[str, tuple[str, ...]] = field(default_factory=dict)
    contraction_log: tuple[ReductionStep, ...] = ()
    objective_terms: tuple[ObjectiveTerm, ...] = ()
    # curves removed by merging, as breakpoint counts
    eliminated_curves: tuple[int, ...] = ()

    @classmethod
    def from_flat(cls, g: NetworkGraph) -> "ModelBGraph":
        return cls(g, {}, (), tuple(objective_terms(g)))

    @property
    def mu(self) -> int:
        return len(self.eliminated_curves)

    def log_json(self) -> str:
        return json.dumps([s.to_json() for s in self.contraction_log], indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# structural step application (shared by the operations and by replay)


def apply_step(g: NetworkGraph, step: ReductionStep) -> NetworkGraph:
    """Apply the structural part of a step; added nodes take the slot of the first removed node."""
    gone_nodes = set(step.removed_nodes)
    gone_arcs = set(step.removed_arcs)
    nodes: dict[str, Node] = {}
    placed = False
    for v, node in g.nodes.items():
        if v in gone_nodes:
            if not placed:
                nodes.update(step.added_nodes)
                placed = True
            continue
        nodes[v] = node
    if not placed:
        nodes.update(step.added_nodes)
    arcs = tuple(a for a in g.arcs if a.id not in gone_arcs) + step.added_arcs
    resources = tuple(r for r in g.resources if r.id not in set(step.removed_resources))
    containers = g.containers
    if step.kind == "FlattenContainer":
        containers = tuple(c for c in containers if c.id != step.subject)
    return g.replace(nodes=nodes, arcs=arcs, resources=resources, containers=containers)


def replay_log(g: NetworkGraph, log: Iterable[ReductionStep]) -> NetworkGraph:
    for step in log:
        g = apply_step(g, step)
    return g


# --------------------------------------------------------------------------
# Lemma-level operations


def _min_capacity(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _contraction(g: NetworkGraph, v: str, kind: str = "ContractBalance", subject: Optional[str] = None) -> ReductionStep:
    node = g.nodes.get(v)
    if not isinstance(node, Balance):
        raise NotContractible(f"{v} is not a balance node")
    ins, outs = g.in_arcs(v), g.out_arcs(v)
    if len(ins) != 1 or len(outs) != 1:
        raise NotContractible(f"{v} has {len(ins)} in-arcs and {len(outs)} out-arcs, need exactly one each")
    a, b = ins[0], outs[0]
    if a.resource != b.resource:
        raise NotContractible(f"{v} converts {a.resource} to {b.resource}")
    if a.tail == b.head:
        raise NotContractible(f"contracting {v} would create a self-loop at {a.tail}")
    # the merged arc keeps the id of the in-arc
    merged = Arc(a.id, a.tail, b.head, a.resource, _min_capacity(a.capacity, b.capacity))
    return ReductionStep(kind, subject or v, (v,), (a.id, b.id), (merged,))


def contract_balance(g: NetworkGraph, v: str) -> tuple[NetworkGraph, ReductionStep]:
    """Remove a degree-two balance node, joining its two arcs into one."""
    step = _contraction(g, v)
    return apply_step(g, step), step


def _mergeability(g: NetworkGraph, v: str, w: str) -> tuple[Arc, GeneratingUnit, GeneratingUnit]:
    nv, nw = g.nodes.get(v), g.nodes.get(w)
    if not isinstance(nv, GeneratingUnit) or not isinstance(nw, GeneratingUnit):
        raise NotMergeable(f"{v} and {w} must both be generating units")
    outs, ins = g.out_arcs(v), g.in_arcs(w)
    if len(outs) != 1 or outs[0].head != w:
        raise NotMergeable(f"{v} must have a single out-arc into {w}")
    if len(ins) != 1:
        raise NotMergeable(f"{w} has {len(ins)} in-arcs, need exactly the one from {v}")
    link = outs[0]
    kinds = g.resource_map
    if len(nv.conversions) != 1:
        raise NotMergeable(f"{v} must be a single-output converter")
    mid = nv.conversions[0].resource_out
    if kinds[mid].kind is not ResourceKind.HEAT:
        raise NotMergeable(f"{v} does not produce a heat-kind resource")
    out_kinds = {kinds[c.resource_out].kind for c in nw.conversions}
    if any(c.resource_in != mid for c in nw.conversions):
        raise NotMergeable(f"{w} has an input other than {mid}")
    if not out_kinds or not out_kinds <= {ResourceKind.HEAT, ResourceKind.POWER} or ResourceKind.HEAT not in out_kinds:
        raise NotMergeable(f"{w} must produce heat, or heat and power")
    if nv.initial_status != nw.initial_status:
        raise NotMergeable(f"{v} and {w} start in different states")
    phi = nv.conversions[0].curve
    if link.capacity is not None and link.capacity < phi.range[1]:
        raise NotMergeable(f"arc {link.id} capacity binds the output of {v}")
    for c in nw.conversions:
        if c.curve.domain[0] <= 0:
            raise NotMergeable(f"{w} has no positive minimum load, so its status is not tied to {v}")
    return link, nv, nw


def _merged_ramp(a_v: Optional[float], a_w: Optional[float], phi: PiecewiseLinear, psi: PiecewiseLinear) -> Optional[float]:
    if a_v is None or a_v >= phi.range[1]:
        return a_w  # the first stage's limit can never bind
    mapped = min(psi.slopes) * a_v
    return mapped if a_w is None else min(a_w, mapped)


def merge_units(
    g: NetworkGraph, v: str, w: str, new_id: Optional[str] = None, parent: Optional[str] = None
) -> tuple[NetworkGraph, ReductionStep]:
    """Contract the arc ``v -> w`` between two sequential units into one unit."""
    link, nv, nw = _mergeability(g, v, w)
    phi = nv.conversions[0].curve
    try:
        conversions = tuple(
            Conversion(nv.conversions[0].resource_in, c.resource_out, compose_pwl(phi, c.curve))
            for c in nw.conversions
        )
    except (DomainMismatch, InvalidCurve) as exc:
        raise NotMergeable(f"curves of {v} and {w} do not compose: {exc}") from exc
    if new_id is None:
        new_id = f"{v}&{w}"
        parent = nv.parent if nv.parent == nw.parent else None
    psi = nw.conversions[0].curve
    merged = GeneratingUnit(
        conversions=conversions,
        min_up=max(nv.min_up, nw.min_up),
        min_down=max(nv.min_down, nw.min_down),
        ramp_up=_merged_ramp(nv.ramp_up, nw.ramp_up, phi, psi),
        ramp_down=_merged_ramp(nv.ramp_down, nw.ramp_down, phi, psi),
        startup_cost=nv.startup_cost + nw.startup_cost,
        initial_status=nv.initial_status,
        parent=parent,
    )
    removed_arcs = [link.id]
    added = []
    for a in g.in_arcs(v):
        removed_arcs.append(a.id)
        added.append(Arc(a.id, a.tail, new_id, a.resource, a.capacity, a.info))
    for a in g.out_arcs(w):
        removed_arcs.append(a.id)
        added.append(Arc(a.id, new_id, a.head, a.resource, a.capacity, a.info))
    step = ReductionStep("MergeUnits", new_id, (v, w), tuple(removed_arcs), tuple(added), ((new_id, merged),))
    return apply_step(g, step), step


# --------------------------------------------------------------------------
# pipeline


def _topological_units(g: NetworkGraph) -> list[str]:
    indeg = {v: 0 for v in g.nodes}
    for a in g.arcs:
        indeg[a.head] += 1
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for a in g.out_arcs(v):
            indeg[a.head] -= 1
            if indeg[a.head] == 0:
                heapq.heappush(heap, a.head)
    seen = set(order)
    order.extend(sorted(v for v in g.nodes if v not in seen))  # nodes on cycles
    return [v for v in order if isinstance(g.nodes[v], GeneratingUnit)]


def _stage_chains(g: NetworkGraph) -> dict[str, tuple[str, ...]]:
    chains: dict[str, list[str]] = {}
    for v, node in g.nodes.items():
        if isinstance(node, GeneratingUnit) and node.parent is not None:
            chains.setdefault(node.parent, []).append(v)
    return {p: tuple(vs) for p, vs in chains.items()}


def flatten(ma: ModelAGraph) -> ModelBGraph:
    g = ma.base
    log: list[ReductionStep] = []

    for c in g.containers:
        step_in = _contraction(g, f"{c.id}.in")
        g1 = apply_step(g, step_in)
        step_out = _contraction(g1, f"{c.id}.out")
        step = ReductionStep(
            "FlattenContainer",
            c.id,
            step_in.removed_nodes + step_out.removed_nodes,
            step_in.removed_arcs + step_out.removed_arcs,
            step_in.added_arcs + step_out.added_arcs,
        )
        g = apply_step(g, step)
        log.append(step)

    terms: list[ObjectiveTerm] = list(ma.objective_terms)
    info_ids = sorted(ma.info_subgraphs)
    for i, k in enumerate(info_ids):
        nodes, arcs = ma.info_subgraphs[k]
        found = [
            ObjectiveTerm(a.tail, a.info.objective, a.info.sign, a.info.term)
            for a in g.arcs
            if a.id in arcs and a.info is not None and a.info.term != "aggregate"
        ]
        resources = [r.id for r in g.resources if r.id == INFO_RESOURCES[k]]
        if i == len(info_ids) - 1:
            resources += [
                r.id for r in g.resources if r.kind is ResourceKind.INFORMATION and r.id not in resources
            ]
        step = ReductionStep(
            "DropInfoSubgraph",
            str(k),
            tuple(v for v in g.nodes if v in nodes),
            tuple(a.id for a in g.arcs if a.id in arcs),
            removed_resources=tuple(resources),
            metadata=tuple(found),
        )
        g = apply_step(g, step)
        log.append(step)
        terms.extend(found)

    while True:
        candidates = sorted(v for v in g.nodes if isinstance(g.nodes[v], Balance))
        for v in candidates:
            try:
                step = _contraction(g, v)
            except NotContractible:
                continue
            g = apply_step(g, step)
            log.append(step)
            break
        else:
            break

    chains = _stage_chains(ma.base)
    merged_units: dict[str, tuple[str, ...]] = {}
    eliminated: list[int] = []
    progress = True
    while progress:
        progress = False
        for v in _topological_units(g):
            outs = g.out_arcs(v)
            if len(outs) != 1:
                continue
            w = outs[0].head
            members = merged_units.get(v, (v,)) + merged_units.get(w, (w,))
            parent = None
            new_id = f"{v}&{w}"
            owners = {getattr(ma.base.nodes.get(m), "parent", None) for m in members}
            if len(owners) == 1 and None not in owners:
                parent = owners.pop()
                if members == chains.get(parent):
                    new_id, parent = parent, None
            before = g
            try:
                g, step = merge_units(g, v, w, new_id, parent)
            except NotMergeable:
                continue
            merged_units.pop(v, None)
            merged_units.pop(w, None)
            merged_units[new_id] = members
            eliminated.append(before.nodes[v].conversions[0].curve.breakpoints)
            terms = _retarget(terms, (v, w), new_id)
            log.append(step)
            progress = True
            break

    return ModelBGraph(g, merged_units, tuple(log), tuple(_dedupe(terms)), tuple(eliminated))


def _retarget(terms: list[ObjectiveTerm], old: tuple[str, ...], new: str) -> list[ObjectiveTerm]:
    return [ObjectiveTerm(new, t.objective, t.sign, t.term) if t.node in old else t for t in terms]


def _dedupe(terms: Iterable[ObjectiveTerm]) -> list[ObjectiveTerm]:
    return list(dict.fromkeys(terms))


def terms_by_node(terms: Iterable[ObjectiveTerm]) -> Mapping[str, list[ObjectiveTerm]]:
    out: dict[str, list[ObjectiveTerm]] = {}
    for t in terms:
        out.setdefault(t.node, []).append(t)
    return out


__all__ = [
    "ModelBGraph", "ReductionStep", "STEP_KINDS", "apply_step", "compose_pwl", "contract_balance",
    "flatten", "merge_units", "replay_log", "terms_by_node",
]
