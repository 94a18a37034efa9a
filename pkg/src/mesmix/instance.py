"""Instance files: a pydantic schema over the JSON document and conversion to
:class:`NetworkGraph`."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import InstanceError
from .network import (
    Arc,
    Balance,
    Bound,
    Bounds,
    Container,
    Conversion,
    Demand,
    GeneratingUnit,
    Market,
    NetworkGraph,
    Resource,
    ResourceKind,
    Stage,
    Storage,
    TimeGrid,
    default_arc_id,
)
from .pwl import PiecewiseLinear

SCHEMA_VERSION = "1.0"


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CurveSpec(_Model):
    source: list[float]
    target: list[float]


class ConversionSpec(_Model):
    input: str
    output: str
    curve: CurveSpec


class UnitParams(_Model):
    conversions: list[ConversionSpec] = []
    min_up: int = 0
    min_down: int = 0
    ramp_up: Optional[float] = None
    ramp_down: Optional[float] = None
    startup_cost: float = 0.0
    initial_status: int = 0


class StageSpec(UnitParams):
    name: str


class UnitSpec(UnitParams):
    kind: Literal["unit"]
    id: str
    stages: list[StageSpec] = []


class StorageSpec(_Model):
    kind: Literal["storage"]
    id: str
    resource: str
    loss: float = 1.0
    load_eff: float = 1.0
    unload_eff: float = 1.0
    level_min: float = 0.0
    level_max: float
    initial_level: float = 0.0


class MarketSpec(_Model):
    kind: Literal["market"]
    id: str
    resource: str
    buy_price: list[float]
    sell_price: list[float]
    emission_factor: float = 0.0


class DemandSpec(_Model):
    kind: Literal["demand"]
    id: str
    resource: str
    demand: list[float]


class BalanceSpec(_Model):
    kind: Literal["balance"]
    id: str


NodeSpec = Annotated[Union[UnitSpec, StorageSpec, MarketSpec, DemandSpec, BalanceSpec], Field(discriminator="kind")]


class ResourceSpec(_Model):
    id: str
    kind: Literal["fuel", "heat", "power"]


class ArcSpec(_Model):
    id: Optional[str] = None
    tail: str
    head: str
    resource: str
    capacity: Optional[float] = None


class ContainerSpec(_Model):
    id: str
    members: list[str]
    boundary_in: str
    boundary_out: str


class GridSpec(_Model):
    step_count: int
    step_hours: float = 1.0


class BoundSpec(_Model):
    lo: float = 0.0
    hi: Optional[float] = None  # null means unbounded


class BoundsSpec(_Model):
    flow: BoundSpec = BoundSpec()
    purchase: BoundSpec = BoundSpec()
    sale: BoundSpec = BoundSpec()


class InstanceFile(_Model):
    schema_version: str = SCHEMA_VERSION
    name: str = ""
    units: dict[str, str] = {"power": "MW", "energy": "MWh", "money": "EUR", "mass": "tCO2"}
    synthetic: bool = False
    grid: GridSpec
    resources: list[ResourceSpec]
    nodes: list[NodeSpec]
    arcs: list[ArcSpec]
    containers: list[ContainerSpec] = []
    bounds: BoundsSpec = BoundsSpec()


@dataclass(frozen=True)
class Instance:
    graph: NetworkGraph
    bounds: Bounds
    document: InstanceFile


# --------------------------------------------------------------------------
# document -> domain


def _curve(c: CurveSpec) -> PiecewiseLinear:
    return PiecewiseLinear(c.source, c.target)


def _unit(p: UnitParams, stages=()) -> GeneratingUnit:
    return GeneratingUnit(
        conversions=tuple(Conversion(c.input, c.output, _curve(c.curve)) for c in p.conversions),
        min_up=p.min_up,
        min_down=p.min_down,
        ramp_up=p.ramp_up,
        ramp_down=p.ramp_down,
        startup_cost=p.startup_cost,
        initial_status=p.initial_status,
        subcomponents=tuple(stages),
    )


def _bound(b: BoundSpec) -> Bound:
    return Bound(b.lo, math.inf if b.hi is None else b.hi)


def to_graph(doc: InstanceFile) -> tuple[NetworkGraph, Bounds]:
    nodes = {}
    for n in doc.nodes:
        if isinstance(n, UnitSpec):
            nodes[n.id] = _unit(n, [Stage(s.name, _unit(s)) for s in n.stages])
        elif isinstance(n, StorageSpec):
            nodes[n.id] = Storage(n.resource, n.loss, n.load_eff, n.unload_eff, n.level_min, n.level_max, n.initial_level)
        elif isinstance(n, MarketSpec):
            nodes[n.id] = Market(n.resource, tuple(n.buy_price), tuple(n.sell_price), n.emission_factor)
        elif isinstance(n, DemandSpec):
            nodes[n.id] = Demand(n.resource, tuple(n.demand))
        else:
            nodes[n.id] = Balance()
    arcs = tuple(Arc(a.id or default_arc_id(a.tail, a.head), a.tail, a.head, a.resource, a.capacity) for a in doc.arcs)
    graph = NetworkGraph(
        resources=tuple(Resource(r.id, ResourceKind(r.kind)) for r in doc.resources),
        nodes=nodes,
        arcs=arcs,
        grid=TimeGrid(doc.grid.step_count, doc.grid.step_hours),
        containers=tuple(Container(c.id, tuple(c.members), c.boundary_in, c.boundary_out) for c in doc.containers),
        name=doc.name,
    )
    bounds = Bounds(_bound(doc.bounds.flow), _bound(doc.bounds.purchase), _bound(doc.bounds.sale))
    return graph, bounds


def parse_instance(text: str) -> Instance:
    try:
        doc = InstanceFile.model_validate_json(text)
    except ValidationError as exc:
        violations = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise InstanceError("instance does not match the schema", violations) from exc
    ids = [n.id for n in doc.nodes]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise InstanceError("duplicate node ids", [f"DuplicateId({d})" for d in dup])
    graph, bounds = to_graph(doc)
    return Instance(graph, bounds, doc)


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    return parse_instance(text)


# --------------------------------------------------------------------------
# domain -> document


def _unit_params(u: GeneratingUnit) -> dict:
    return {
        "conversions": [
            {"input": c.resource_in, "output": c.resource_out,
             "curve": {"source": list(c.curve.source), "target": list(c.curve.target)}}
            for c in u.conversions
        ],
        "min_up": u.min_up,
        "min_down": u.min_down,
        "ramp_up": u.ramp_up,
        "ramp_down": u.ramp_down,
        "startup_cost": u.startup_cost,
        "initial_status": u.initial_status,
    }


def _bound_doc(b: Bound) -> dict:
    return {"lo": b.lo, "hi": None if math.isinf(b.hi) else b.hi}


def graph_to_document(g: NetworkGraph, bounds: Bounds = Bounds(), synthetic: bool = False) -> InstanceFile:
    nodes = []
    for v, n in g.nodes.items():
        if isinstance(n, GeneratingUnit):
            entry = {"kind": "unit", "id": v, **_unit_params(n)}
            entry["stages"] = [{"name": s.name, **_unit_params(s.unit)} for s in n.subcomponents]
        elif isinstance(n, Storage):
            entry = {"kind": "storage", "id": v, "resource": n.resource, "loss": n.loss, "load_eff": n.load_eff,
                     "unload_eff": n.unload_eff, "level_min": n.level_min, "level_max": n.level_max,
                     "initial_level": n.initial_level}
        elif isinstance(n, Market):
            entry = {"kind": "market", "id": v, "resource": n.resource, "buy_price": list(n.buy_price),
                     "sell_price": list(n.sell_price), "emission_factor": n.emission_factor}
        elif isinstance(n, Demand):
            entry = {"kind": "demand", "id": v, "resource": n.resource, "demand": list(n.demand)}
        elif isinstance(n, Balance):
            entry = {"kind": "balance", "id": v}
        else:
            raise InstanceError(f"node {v} of kind {type(n).__name__} cannot be stored in an instance file")
        nodes.append(entry)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": g.name,
        "synthetic": synthetic,
        "grid": {"step_count": g.grid.step_count, "step_hours": g.grid.step_hours},
        "resources": [{"id": r.id, "kind": r.kind.value} for r in g.resources],
        "nodes": nodes,
        "arcs": [{"id": a.id, "tail": a.tail, "head": a.head, "resource": a.resource, "capacity": a.capacity}
                 for a in g.arcs],
        "containers": [{"id": c.id, "members": list(c.members), "boundary_in": c.boundary_in,
                        "boundary_out": c.boundary_out} for c in g.containers],
        "bounds": {"flow": _bound_doc(bounds.flow), "purchase": _bound_doc(bounds.purchase),
                   "sale": _bound_doc(bounds.sale)},
    }
    return InstanceFile.model_validate(doc)


def dump_instance(g: NetworkGraph, bounds: Bounds = Bounds(), synthetic: bool = False) -> str:
    doc = graph_to_document(g, bounds, synthetic)
    return json.dumps(doc.model_dump(mode="json"), indent=2) + "\n"


def instance_schema() -> dict:
    return InstanceFile.model_json_schema()
