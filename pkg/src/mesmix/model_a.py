"""Hierarchical, port-based representation ("Model A").

``build_model_a`` turns an instance graph into the readability-oriented
form: every unit stage becomes its own node, every container gets a pair of
boundary balance nodes, and the three objectives are fed by explicit
information arcs that end in objective nodes.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import TemplateMismatch
from .network import (
    Arc,
    Balance,
    Container,
    Demand,
    GeneratingUnit,
    InfoTag,
    Market,
    NetworkGraph,
    Node,
    ObjectiveNode,
    Resource,
    ResourceKind,
    Storage,
    default_arc_id,
    is_chp,
)

OBJECTIVES = {1: "cost", 2: "emission", 3: "chp_heat"}
INFO_RESOURCES = {k: f"info_{name}" for k, name in OBJECTIVES.items()}
SIGNAL = "signal"

# storage ports as drawn in the storage port figure; only the thermal pair carries flow
STORAGE_IN_PORTS = ("actual_input", "thermal_input", "flow_temperature", "operation_loading", "loading")
STORAGE_OUT_PORTS = (
    "actual_output", "thermal_output", "return_temperature", "operation_unloading", "unloading", "storage_level",
)


def objective_node_id(k: int) -> str:
    return f"objective.{OBJECTIVES[k]}"


@dataclass(frozen=True)
class Port:
    owner: str
    direction: str  # "in" | "out"
    resource: str
    slot: int
    label: str = ""
    single: bool = False  # exactly one arc must bind this port


@dataclass(frozen=True)
class ObjectiveTerm:
    """One contribution of a node to an objective (implicit information transport)."""

    node: str
    objective: int
    sign: int
    term: str  # purchase | sale | emission | startup | chp_heat


@dataclass(frozen=True)
class ModelAGraph:
    base: NetworkGraph
    ports: tuple[Port, ...]
    port_bindings: dict[str, tuple[Port, Port]]
    info_subgraphs: dict[int, tuple[frozenset[str], frozenset[str]]]
    subcomponents: int = 0
    objective_terms: tuple[ObjectiveTerm, ...] = ()

    @property
    def info_nodes(self) -> int:
        return sum(len(nodes) for nodes, _ in self.info_subgraphs.values())

    @property
    def info_arcs(self) -> int:
        return sum(len(arcs) for _, arcs in self.info_subgraphs.values())

    @classmethod
    def lift(cls, graph: NetworkGraph, objective_terms: Iterable[ObjectiveTerm] = ()) -> "ModelAGraph":
        """Wrap an already flat graph without adding any Model A structure."""
        ports, bindings = bind_ports(graph)
        return cls(graph, ports, bindings, {}, 0, tuple(objective_terms))


# --------------------------------------------------------------------------
# construction steps


def expand_subcomponents(g: NetworkGraph) -> tuple[NetworkGraph, int]:
    """Replace each staged unit by its chain of stage units."""
    nodes: dict[str, Node] = {}
    first: dict[str, str] = {}
    last: dict[str, str] = {}
    chain_arcs: list[Arc] = []
    tally = 0
    for v, node in g.nodes.items():
        if not (isinstance(node, GeneratingUnit) and node.subcomponents):
            nodes[v] = node
            continue
        ids = [f"{v}.{s.name}" for s in node.subcomponents]
        for sid, stage in zip(ids, node.subcomponents):
            nodes[sid] = GeneratingUnit(
                conversions=stage.unit.conversions,
                min_up=stage.unit.min_up,
                min_down=stage.unit.min_down,
                ramp_up=stage.unit.ramp_up,
                ramp_down=stage.unit.ramp_down,
                startup_cost=stage.unit.startup_cost,
                initial_status=stage.unit.initial_status,
                parent=v,
            )
        for (a, sa), b in zip(zip(ids, node.subcomponents), ids[1:]):
            conv = sa.unit.conversions[0]
            chain_arcs.append(Arc(default_arc_id(a, b), a, b, conv.resource_out, capacity=conv.curve.range[1]))
        first[v], last[v] = ids[0], ids[-1]
        tally += len(ids) - 1
    if not first:
        return g, 0

    arcs = [
        Arc(a.id, last.get(a.tail, a.tail), first.get(a.head, a.head), a.resource, a.capacity, a.info)
        for a in g.arcs
    ]
    containers = []
    for c in g.containers:
        members: list[str] = []
        for m in c.members:
            node = g.nodes.get(m)
            if isinstance(node, GeneratingUnit) and node.subcomponents:
                members.extend(f"{m}.{s.name}" for s in node.subcomponents)
            else:
                members.append(m)
        containers.append(Container(c.id, tuple(members), c.boundary_in, c.boundary_out))
    return g.replace(nodes=nodes, arcs=tuple(arcs) + tuple(chain_arcs), containers=tuple(containers)), tally


def wrap_containers(g: NetworkGraph) -> NetworkGraph:
    """Route each container's boundary arcs through a pair of balance nodes."""
    if not g.containers:
        return g
    nodes = dict(g.nodes)
    arcs = {a.id: a for a in g.arcs}
    order = [a.id for a in g.arcs]
    containers = []
    for c in g.containers:
        b_in, b_out = f"{c.id}.in", f"{c.id}.out"
        nodes[b_in] = Balance()
        nodes[b_out] = Balance()
        a_in, a_out = arcs[c.boundary_in], arcs[c.boundary_out]
        arcs[a_in.id] = Arc(a_in.id, a_in.tail, b_in, a_in.resource, a_in.capacity)
        inner_in = Arc(default_arc_id(b_in, a_in.head), b_in, a_in.head, a_in.resource, a_in.capacity)
        arcs[a_out.id] = Arc(a_out.id, a_out.tail, b_out, a_out.resource, a_out.capacity)
        outer_out = Arc(default_arc_id(b_out, a_out.head), b_out, a_out.head, a_out.resource, a_out.capacity)
        for extra in (inner_in, outer_out):
            arcs[extra.id] = extra
            order.append(extra.id)
        containers.append(Container(c.id, c.members + (b_in, b_out), a_in.id, outer_out.id))
    return g.replace(nodes=nodes, arcs=tuple(arcs[i] for i in order), containers=tuple(containers))


def objective_terms(g: NetworkGraph) -> list[ObjectiveTerm]:
    """Objective contributions of every node, in node order."""
    terms = []
    resources = g.resource_map
    for v, node in g.nodes.items():
        if isinstance(node, Market):
            if g.out_arcs(v):
                if any(node.buy_price):
                    terms.append(ObjectiveTerm(v, 1, +1, "purchase"))
                if node.emission_factor > 0:
                    terms.append(ObjectiveTerm(v, 2, +1, "emission"))
            if g.in_arcs(v) and any(node.sell_price):
                terms.append(ObjectiveTerm(v, 1, -1, "sale"))
        elif isinstance(node, GeneratingUnit):
            if node.startup_cost > 0:
                terms.append(ObjectiveTerm(v, 1, +1, "startup"))
            if is_chp(node, resources):
                terms.append(ObjectiveTerm(v, 3, -1, "chp_heat"))
    return terms


def add_information_transport(g: NetworkGraph) -> tuple[NetworkGraph, dict[int, tuple[frozenset, frozenset]]]:
    """Add objective nodes and the information arcs that feed them.

    A single contribution to an objective port is wired straight to the
    objective node; two or more are summed in an aggregating balance node
    first.
    """
    nodes = dict(g.nodes)
    arcs = list(g.arcs)
    resources = list(g.resources) + [Resource(r, ResourceKind.INFORMATION) for r in INFO_RESOURCES.values()]
    if any(isinstance(n, Storage) for n in g.nodes.values()):
        resources.append(Resource(SIGNAL, ResourceKind.INFORMATION))

    grouped: dict[tuple[int, int], list[ObjectiveTerm]] = defaultdict(list)
    for term in objective_terms(g):
        grouped[(term.objective, term.sign)].append(term)

    subgraphs: dict[int, tuple[frozenset, frozenset]] = {}
    for k in OBJECTIVES:
        target = objective_node_id(k)
        nodes[target] = ObjectiveNode(k)
        members, links = {target}, set()
        for sign in (+1, -1):
            terms = grouped.get((k, sign), [])
            if not terms:
                continue
            sink = target
            if len(terms) > 1:
                sink = f"{target}.{'pos' if sign > 0 else 'neg'}"
                nodes[sink] = Balance()
                members.add(sink)
                agg = Arc(default_arc_id(sink, target), sink, target, INFO_RESOURCES[k],
                          info=InfoTag(k, sign, "aggregate"))
                arcs.append(agg)
                links.add(agg.id)
            for term in terms:
                a = Arc(default_arc_id(term.node, sink), term.node, sink, INFO_RESOURCES[k],
                        info=InfoTag(k, sign, term.term))
                arcs.append(a)
                links.add(a.id)
        subgraphs[k] = (frozenset(members), frozenset(links))
    return g.replace(nodes=nodes, arcs=tuple(arcs), resources=tuple(resources)), subgraphs


# --------------------------------------------------------------------------
# ports


def port_template(v: str, node: Node, g: NetworkGraph) -> list[Port]:
    """The fixed port set of a node."""
    ports: list[Port] = []

    def add(direction, resource, label, single=False):
        slot = sum(1 for p in ports if p.direction == direction)
        ports.append(Port(v, direction, resource, slot, label, single))

    if isinstance(node, GeneratingUnit):
        for r in node.input_resources:
            add("in", r, r, single=True)
        for r in node.output_resources:
            add("out", r, r, single=True)
        add("out", INFO_RESOURCES[1], "startup")
        if is_chp(node, g.resource_map):
            add("out", INFO_RESOURCES[3], "chp_heat")
    elif isinstance(node, Storage):
        for label in STORAGE_IN_PORTS:
            add("in", node.resource if label == "thermal_input" else SIGNAL, label, single=label == "thermal_input")
        for label in STORAGE_OUT_PORTS:
            add("out", node.resource if label == "thermal_output" else SIGNAL, label, single=label == "thermal_output")
    elif isinstance(node, Market):
        add("out", node.resource, "purchase")
        add("in", node.resource, "sale")
        add("out", INFO_RESOURCES[1], "purchase")
        add("out", INFO_RESOURCES[1], "sale")
        add("out", INFO_RESOURCES[2], "emission")
    elif isinstance(node, Demand):
        add("in", node.resource, "demand")
    elif isinstance(node, ObjectiveNode):
        add("in", INFO_RESOURCES[node.objective], "positive")
        add("in", INFO_RESOURCES[node.objective], "negative")
    elif isinstance(node, Balance):
        incident = [a.resource for a in g.in_arcs(v)] + [a.resource for a in g.out_arcs(v)]
        for r in dict.fromkeys(incident):
            add("in", r, r)
            add("out", r, r)
    return ports


def _match(ports: list[Port], direction: str, arc: Arc, g: NetworkGraph) -> Optional[Port]:
    node = g.nodes[arc.tail if direction == "out" else arc.head]
    for p in ports:
        if p.direction != direction or p.resource != arc.resource:
            continue
        if arc.info is None or isinstance(node, Balance):
            return p
        if isinstance(node, ObjectiveNode):
            if p.label == ("positive" if arc.info.sign > 0 else "negative"):
                return p
        elif arc.info.term in (p.label, "aggregate") or p.label == arc.info.term:
            return p
    return None


def bind_ports(g: NetworkGraph) -> tuple[tuple[Port, ...], dict[str, tuple[Port, Port]]]:
    templates = {v: port_template(v, node, g) for v, node in g.nodes.items()}
    bindings: dict[str, tuple[Port, Port]] = {}
    usage: dict[Port, int] = defaultdict(int)
    for a in g.arcs:
        out_port = _match(templates[a.tail], "out", a, g)
        in_port = _match(templates[a.head], "in", a, g)
        if out_port is None:
            raise TemplateMismatch(f"{a.tail} has no out-port for {a.resource} (arc {a.id})")
        if in_port is None:
            raise TemplateMismatch(f"{a.head} has no in-port for {a.resource} (arc {a.id})")
        bindings[a.id] = (out_port, in_port)
        usage[out_port] += 1
        usage[in_port] += 1
    for ports in templates.values():
        for p in ports:
            if p.single and usage[p] != 1:
                state = "lacks an arc" if usage[p] == 0 else f"has {usage[p]} arcs"
                raise TemplateMismatch(f"{p.owner} port {p.direction}:{p.label} ({p.resource}) {state}")
    flat = tuple(p for v in g.nodes for p in templates[v])
    return flat, bindings


# --------------------------------------------------------------------------
# public operations


def build_model_a(g: NetworkGraph) -> ModelAGraph:
    expanded, tally = expand_subcomponents(g)
    wrapped = wrap_containers(expanded)
    full, subgraphs = add_information_transport(wrapped)
    ports, bindings = bind_ports(full)
    return ModelAGraph(full, ports, bindings, subgraphs, tally)


@dataclass(frozen=True)
class PortVariable:
    name: str
    node: str
    direction: str
    arc: str
    resource: str
    t: int


def port_variable_name(direction: str, node: str, arc: str, resource: str, t: int) -> str:
    return f"flow_port_{direction}({node},{arc},{resource},{t})"


def enumerate_port_variables(ma: ModelAGraph) -> list[PortVariable]:
    """Two flow descriptors per arc and time step: tail out-port, head in-port."""
    out = []
    for t in ma.base.grid.steps:
        for a in ma.base.arcs:
            out.append(PortVariable(port_variable_name("out", a.tail, a.id, a.resource, t), a.tail, "out", a.id, a.resource, t))
            out.append(PortVariable(port_variable_name("in", a.head, a.id, a.resource, t), a.head, "in", a.id, a.resource, t))
    return out


__all__ = [
    "INFO_RESOURCES", "OBJECTIVES", "ModelAGraph", "ObjectiveTerm", "Port", "PortVariable",
    "build_model_a", "enumerate_port_variables", "objective_node_id", "objective_terms",
    "port_variable_name",
]
