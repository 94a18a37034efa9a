"""Domain vocabulary shared by both graph representations.

Everything here is an immutable value object.  Graph transformations in
:mod:`mesmix.model_a` and :mod:`mesmix.model_b` never mutate a graph; they
build a new one with :meth:`NetworkGraph.replace`.
"""

from __future__ import annotations

import enum
import math
import re
from collections import defaultdict, deque
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Optional, Union

from .pwl import PiecewiseLinear

ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.&]*$")
ARC_ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.&/]*$")


class ResourceKind(str, enum.Enum):
    FUEL = "fuel"
    HEAT = "heat"
    POWER = "power"
    INFORMATION = "information"


@dataclass(frozen=True)
class Resource:
    id: str
    kind: ResourceKind


@dataclass(frozen=True)
class TimeGrid:
    step_count: int
    step_hours: float = 1.0

    @property
    def steps(self) -> range:
        return range(1, self.step_count + 1)


@dataclass(frozen=True)
class Bound:
    lo: float = 0.0
    hi: float = math.inf


@dataclass(frozen=True)
class Bounds:
    """Default variable bounds per family; arc capacities override ``flow.hi``."""

    flow: Bound = Bound()
    purchase: Bound = Bound()
    sale: Bound = Bound()


# --------------------------------------------------------------------------
# node kinds


@dataclass(frozen=True)
class Conversion:
    resource_in: str
    resource_out: str
    curve: PiecewiseLinear


@dataclass(frozen=True)
class GeneratingUnit:
    conversions: tuple[Conversion, ...] = ()
    min_up: int = 0
    min_down: int = 0
    ramp_up: Optional[float] = None
    ramp_down: Optional[float] = None
    startup_cost: float = 0.0
    initial_status: int = 0
    subcomponents: tuple["Stage", ...] = ()
    parent: Optional[str] = None

    @property
    def input_resources(self) -> tuple[str, ...]:
        if self.subcomponents:
            return self.subcomponents[0].unit.input_resources
        return tuple(dict.fromkeys(c.resource_in for c in self.conversions))

    @property
    def output_resources(self) -> tuple[str, ...]:
        if self.subcomponents:
            return self.subcomponents[-1].unit.output_resources
        return tuple(dict.fromkeys(c.resource_out for c in self.conversions))

    def conversion_to(self, resource: str) -> Conversion:
        for c in self.conversions:
            if c.resource_out == resource:
                return c
        raise KeyError(resource)


@dataclass(frozen=True)
class Stage:
    """One subcomponent of a generating unit (expanded only in Model A)."""

    name: str
    unit: GeneratingUnit


@dataclass(frozen=True)
class Storage:
    resource: str
    loss: float = 1.0
    load_eff: float = 1.0
    unload_eff: float = 1.0
    level_min: float = 0.0
    level_max: float = 0.0
    initial_level: float = 0.0


@dataclass(frozen=True)
class Market:
    resource: str
    buy_price: tuple[float, ...] = ()
    sell_price: tuple[float, ...] = ()
    emission_factor: float = 0.0


@dataclass(frozen=True)
class Demand:
    resource: str
    demand: tuple[float, ...] = ()


@dataclass(frozen=True)
class Balance:
    pass


@dataclass(frozen=True)
class ObjectiveNode:
    objective: int


Node = Union[GeneratingUnit, Storage, Market, Demand, Balance, ObjectiveNode]

KIND_NAMES = {
    GeneratingUnit: "unit",
    Storage: "storage",
    Market: "market",
    Demand: "demand",
    Balance: "balance",
    ObjectiveNode: "objective",
}


def kind_name(node: Node) -> str:
    return KIND_NAMES[type(node)]


def is_chp(unit: GeneratingUnit, resources: Mapping[str, Resource]) -> bool:
    kinds = {resources[r].kind for r in unit.output_resources if r in resources}
    return ResourceKind.HEAT in kinds and ResourceKind.POWER in kinds


def heat_output(unit: GeneratingUnit, resources: Mapping[str, Resource]) -> Optional[str]:
    for r in unit.output_resources:
        if r in resources and resources[r].kind is ResourceKind.HEAT:
            return r
    return None


# --------------------------------------------------------------------------
# arcs, containers, graph


@dataclass(frozen=True)
class InfoTag:
    """What an information arc transports: a term of one objective."""

    objective: int
    sign: int  # +1 or -1, the objective-node port the flow ends in
    term: str  # purchase | sale | emission | startup | chp_heat | aggregate


@dataclass(frozen=True)
class Arc:
    id: str
    tail: str
    head: str
    resource: str
    capacity: Optional[float] = None
    info: Optional[InfoTag] = None


def default_arc_id(tail: str, head: str) -> str:
    return f"{tail}/{head}"


@dataclass(frozen=True)
class Container:
    id: str
    members: tuple[str, ...]
    boundary_in: str
    boundary_out: str


@dataclass(frozen=True)
class NetworkGraph:
    resources: tuple[Resource, ...]
    nodes: Mapping[str, Node]
    arcs: tuple[Arc, ...]
    grid: TimeGrid
    containers: tuple[Container, ...] = ()
    name: str = ""

    @classmethod
    def empty(cls, step_count: int = 1, step_hours: float = 1.0) -> "NetworkGraph":
        return cls((), {}, (), TimeGrid(step_count, step_hours))

    def replace(self, **changes) -> "NetworkGraph":
        return replace(self, **changes)

    @cached_property
    def resource_map(self) -> dict[str, Resource]:
        return {r.id: r for r in self.resources}

    @cached_property
    def arc_map(self) -> dict[str, Arc]:
        return {a.id: a for a in self.arcs}

    @cached_property
    def _adjacency(self) -> tuple[dict[str, list[Arc]], dict[str, list[Arc]]]:
        ins: dict[str, list[Arc]] = defaultdict(list)
        outs: dict[str, list[Arc]] = defaultdict(list)
        for a in self.arcs:
            outs[a.tail].append(a)
            ins[a.head].append(a)
        return ins, outs

    def in_arcs(self, v: str) -> list[Arc]:
        return self._adjacency[0].get(v, [])

    def out_arcs(self, v: str) -> list[Arc]:
        return self._adjacency[1].get(v, [])

    def nodes_of(self, kind: type) -> list[str]:
        return [v for v, n in self.nodes.items() if isinstance(n, kind)]

    @property
    def containers_by_id(self) -> dict[str, Container]:
        return {c.id: c for c in self.containers}

    def is_information(self, resource: str) -> bool:
        r = self.resource_map.get(resource)
        return r is not None and r.kind is ResourceKind.INFORMATION

    @property
    def resource_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if not self.is_information(a.resource)]


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True, order=True)
class Violation:
    code: str
    subject: str
    detail: str = ""
    severity: str = "error"

    def __str__(self) -> str:
        text = f"{self.code}({self.subject})"
        return f"{text}: {self.detail}" if self.detail else text


def _curve_violations(owner: str, curve: PiecewiseLinear) -> Iterable[Violation]:
    for problem in curve.issues():
        yield Violation(problem, owner, f"{curve.source} -> {curve.target}")


def _series_violation(owner: str, label: str, series: tuple, grid: TimeGrid) -> Iterable[Violation]:
    if len(series) != grid.step_count:
        yield Violation("SeriesLength", owner, f"{label} has {len(series)} values, expected {grid.step_count}")


def _unit_violations(v: str, unit: GeneratingUnit, resources: Mapping[str, Resource]) -> Iterable[Violation]:
    if unit.min_up < 0 or unit.min_down < 0:
        yield Violation("NegativeParameter", v, "min_up/min_down must be >= 0")
    for label in ("ramp_up", "ramp_down"):
        value = getattr(unit, label)
        if value is not None and value < 0:
            yield Violation("NegativeParameter", v, f"{label} must be >= 0")
    if unit.startup_cost < 0:
        yield Violation("NegativeParameter", v, "startup_cost must be >= 0")
    if unit.initial_status not in (0, 1):
        yield Violation("InvalidParameter", v, "initial_status must be 0 or 1")
    if unit.subcomponents:
        if unit.conversions:
            yield Violation("InvalidParameter", v, "a unit with stages declares conversions per stage only")
        names = [s.name for s in unit.subcomponents]
        if len(set(names)) != len(names):
            yield Violation("DuplicateId", v, "repeated stage name")
        for prev, nxt in zip(unit.subcomponents, unit.subcomponents[1:]):
            outs = prev.unit.output_resources
            if len(outs) != 1 or nxt.unit.input_resources != outs:
                yield Violation("StageChain", v, f"stage {prev.name} must feed stage {nxt.name} through one resource")
        for stage in unit.subcomponents:
            sid = f"{v}.{stage.name}"
            if not ID_PATTERN.match(stage.name):
                yield Violation("InvalidId", sid)
            if stage.unit.subcomponents:
                yield Violation("InvalidParameter", sid, "stages cannot be nested")
            if stage.unit.initial_status != unit.initial_status:
                yield Violation("InvalidParameter", sid, "stage initial_status differs from its unit")
            yield from _unit_violations(sid, stage.unit, resources)
        return
    if not unit.conversions:
        yield Violation("InvalidParameter", v, "unit without conversions")
    ins = {c.resource_in for c in unit.conversions}
    if len(ins) > 1:
        yield Violation("MultipleInputResources", v, f"inputs {sorted(ins)}")
    outs = [c.resource_out for c in unit.conversions]
    if len(set(outs)) != len(outs):
        yield Violation("DuplicateConversion", v, "one conversion per output resource")
    for c in unit.conversions:
        for r in (c.resource_in, c.resource_out):
            if r not in resources:
                yield Violation("UnknownResource", v, r)
        yield from _curve_violations(v, c.curve)


def _node_violations(v: str, node: Node, g: NetworkGraph) -> Iterable[Violation]:
    resources = g.resource_map
    if not ID_PATTERN.match(v):
        yield Violation("InvalidId", v, "ids use letters, digits, '_', '.', '&'")
    if isinstance(node, GeneratingUnit):
        yield from _unit_violations(v, node, resources)
        return
    if isinstance(node, (Storage, Market, Demand)) and node.resource not in resources:
        yield Violation("UnknownResource", v, node.resource)
    if isinstance(node, Storage):
        for label in ("loss", "load_eff", "unload_eff"):
            value = getattr(node, label)
            if not 0 < value <= 1:
                yield Violation("InvalidParameter", v, f"{label}={value} outside (0, 1]")
        if not node.level_min <= node.initial_level <= node.level_max:
            yield Violation("InvalidParameter", v, "level_min <= initial_level <= level_max violated")
    elif isinstance(node, Market):
        yield from _series_violation(v, "buy_price", node.buy_price, g.grid)
        yield from _series_violation(v, "sell_price", node.sell_price, g.grid)
        if node.emission_factor < 0:
            yield Violation("NegativeParameter", v, "emission_factor")
        if any(x < 0 for x in node.buy_price + node.sell_price):
            yield Violation("NegativeParameter", v, "prices must be >= 0")
    elif isinstance(node, Demand):
        yield from _series_violation(v, "demand", node.demand, g.grid)
        if any(d < 0 for d in node.demand):
            yield Violation("NegativeParameter", v, "demand")


def _produces(g: NetworkGraph, v: str, resource: str) -> bool:
    node = g.nodes[v]
    if isinstance(node, Market):
        return node.resource == resource
    if isinstance(node, GeneratingUnit):
        return resource in node.output_resources
    return False


def _unreachable_demands(g: NetworkGraph) -> Iterable[Violation]:
    for d in g.nodes_of(Demand):
        resource = g.nodes[d].resource
        seen = {d}
        queue = deque([d])
        found = False
        while queue and not found:
            v = queue.popleft()
            for a in g.in_arcs(v):
                if a.tail not in g.nodes or a.tail in seen:
                    continue
                if _produces(g, a.tail, resource):
                    found = True
                    break
                seen.add(a.tail)
                queue.append(a.tail)
        if not found:
            yield Violation("Unreachable", d, f"no producer of {resource} upstream", severity="warning")


def validate_instance(g: NetworkGraph, allow_information: bool = False) -> list[Violation]:
    """Check every type invariant of ``g``; violations are returned, never raised.

    The result is sorted, so it does not depend on node or arc insertion order.
    """
    out: list[Violation] = []
    grid = g.grid
    if grid.step_count < 1:
        out.append(Violation("InvalidTimeGrid", "grid", "step_count must be >= 1"))
    if not grid.step_hours > 0:
        out.append(Violation("InvalidTimeGrid", "grid", "step_hours must be > 0"))

    seen_resources: set[str] = set()
    for r in g.resources:
        if r.id in seen_resources:
            out.append(Violation("DuplicateId", r.id, "resource"))
        seen_resources.add(r.id)
        if r.kind is ResourceKind.INFORMATION and not allow_information:
            out.append(Violation("InformationResource", r.id, "information resources exist only in Model A"))

    for v, node in g.nodes.items():
        if isinstance(node, ObjectiveNode) and not allow_information:
            out.append(Violation("ObjectiveNode", v, "objective nodes exist only in Model A"))
        out.extend(_node_violations(v, node, g))

    seen_arcs: set[str] = set()
    for a in g.arcs:
        if a.id in seen_arcs:
            out.append(Violation("DuplicateId", a.id, "arc"))
        seen_arcs.add(a.id)
        if not ARC_ID_PATTERN.match(a.id):
            out.append(Violation("InvalidId", a.id, "arc"))
        for end in (a.tail, a.head):
            if end not in g.nodes:
                out.append(Violation("MissingEndpoint", end, f"arc {a.id}"))
        if a.tail == a.head:
            out.append(Violation("SelfLoop", a.id))
        if a.resource not in g.resource_map:
            out.append(Violation("UnknownResource", a.id, a.resource))
        if a.capacity is not None and a.capacity < 0:
            out.append(Violation("NegativeParameter", a.id, "capacity"))

    owner: dict[str, str] = {}
    for c in g.containers:
        members = set(c.members)
        for m in c.members:
            if m not in g.nodes:
                out.append(Violation("MissingEndpoint", m, f"container {c.id}"))
            elif m in owner:
                out.append(Violation("ContainerOverlap", m, f"in {owner[m]} and {c.id}"))
            else:
                owner[m] = c.id
        crossing = {
            a.id for a in g.arcs
            if not g.is_information(a.resource) and ((a.tail in members) != (a.head in members))
        }
        arc_in, arc_out = g.arc_map.get(c.boundary_in), g.arc_map.get(c.boundary_out)
        if arc_in is None or arc_in.head not in members or arc_in.tail in members:
            out.append(Violation("ContainerBoundary", c.id, f"boundary_in {c.boundary_in} must enter the container"))
        if arc_out is None or arc_out.tail not in members or arc_out.head in members:
            out.append(Violation("ContainerBoundary", c.id, f"boundary_out {c.boundary_out} must leave the container"))
        extra = crossing - {c.boundary_in, c.boundary_out}
        if extra:
            out.append(Violation("ContainerBoundary", c.id, f"arcs {sorted(extra)} cross the boundary"))

    if not any(v.code == "MissingEndpoint" for v in out):
        out.extend(_unreachable_demands(g))
    return sorted(out)


def flow_capacity(arc: Arc, bounds: Bounds) -> float:
    if arc.capacity is not None:
        return min(arc.capacity, bounds.flow.hi)
    return bounds.flow.hi


def unit_nodes(g: NetworkGraph) -> list[str]:
    return g.nodes_of(GeneratingUnit)


__all__ = [
    "Arc", "Balance", "Bound", "Bounds", "Container", "Conversion", "Demand", "GeneratingUnit",
    "InfoTag", "Market", "NetworkGraph", "Node", "ObjectiveNode", "Resource", "ResourceKind",
    "Stage", "Storage", "TimeGrid", "Violation", "default_arc_id", "flow_capacity", "heat_output",
    "is_chp", "kind_name", "unit_nodes", "validate_instance",
]
