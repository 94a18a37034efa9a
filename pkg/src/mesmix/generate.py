"""Synthetic instances: the Berlin-like district heating scenario and a
seeded random corpus for the equivalence and oracle suites.

All demand and price series are synthetic; only the topology and the
capacity shares follow the published study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

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

# heat capacity shares of the four generating units
BERLIN_SHARES = {"heating_plant": 0.816, "chp_biomass": 0.168, "chp_gas": 0.013, "chp_biogas": 0.002}
STORAGE_SHARE = 0.8474
PEAK_FRACTION = 0.95
SEASON_LEVEL = {"onset": 0.45, "midseason": 0.70, "conclusion": 0.35}


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    template: Literal["berlin_dh"] = "berlin_dh"
    season: Literal["onset", "midseason", "conclusion"] = "onset"
    rng_seed: int = 1
    step_hours: float = 4.0
    horizon_days: int = 31
    total_heat_capacity: float = 500.0

    @property
    def step_count(self) -> int:
        return int(round(self.horizon_days * 24 / self.step_hours))


def _r(x: float) -> float:
    # generated numbers are rounded so files stay short and stable
    return float(round(x, 6))


def _chain(fuel: str, heat_max: float, min_frac: float, power_ratio: Optional[float], tag: str,
           startup: float, min_up: int, min_down: int, ramp: Optional[float]) -> tuple[Stage, ...]:
    """Three-stage unit: furnace -> boiler -> turbine/exchanger."""
    steam, hot = f"{tag}_steam", f"{tag}_hot"
    eff3 = 0.95
    q_in_max = heat_max / eff3
    f_max = q_in_max / (0.97 * 0.92)
    f_pts = [min_frac * f_max, 0.6 * f_max, f_max]
    s_pts = [0.86 * f_pts[0], 0.6 * f_max * 0.93, 0.92 * f_max]
    h_pts = [0.97 * s for s in (s_pts[0], s_pts[-1])]
    furnace = GeneratingUnit((Conversion(fuel, steam, PiecewiseLinear([_r(x) for x in f_pts], [_r(x) for x in s_pts])),),
                             startup_cost=startup)
    boiler = GeneratingUnit((Conversion(steam, hot, PiecewiseLinear([_r(s_pts[0]), _r(s_pts[-1])], [_r(h) for h in h_pts])),))
    heat_curve = PiecewiseLinear([_r(h) for h in h_pts], [_r(eff3 * h_pts[0]), _r(heat_max)])
    convs = [Conversion(hot, "heat", heat_curve)]
    if power_ratio is not None:
        convs.append(Conversion(hot, "power", PiecewiseLinear([_r(h) for h in h_pts],
                                                              [_r(power_ratio * eff3 * h_pts[0]), _r(power_ratio * heat_max)])))
    last = GeneratingUnit(tuple(convs), min_up=min_up, min_down=min_down, ramp_up=ramp, ramp_down=ramp)
    return (Stage("furnace", furnace), Stage("boiler", boiler), Stage("turbine", last))


def chain_resources(tag: str) -> list[Resource]:
    return [Resource(f"{tag}_steam", ResourceKind.HEAT), Resource(f"{tag}_hot", ResourceKind.HEAT)]


def berlin_graph(spec: ScenarioSpec) -> tuple[NetworkGraph, Bounds]:
    rng = np.random.default_rng([spec.rng_seed, list(SEASON_LEVEL).index(spec.season)])
    T = spec.step_count
    Q = spec.total_heat_capacity
    hours = (np.arange(T) + 0.5) * spec.step_hours
    day = hours / 24.0

    # demand: seasonal base + diurnal sinusoid + bounded noise, peak <= 95 % of capacity
    level = SEASON_LEVEL[spec.season]
    trend = {"onset": 0.25, "midseason": 0.0, "conclusion": -0.25}[spec.season]
    base = level * (1 + trend * (day / spec.horizon_days - 0.5))
    diurnal = 0.12 * np.sin(2 * np.pi * (hours % 24) / 24 - np.pi / 2)
    noise = rng.uniform(-0.03, 0.03, T)
    shape = np.clip(base + diurnal + noise, 0.15, None)
    demand = shape / shape.max() * min(PEAK_FRACTION, shape.max()) * Q
    demand = np.maximum(demand, 0.15 * Q)

    gas_price = 32 + 6 * level + rng.uniform(-2, 2, T)
    power_price = 55 + 20 * np.sin(2 * np.pi * (hours % 24) / 24) + rng.uniform(-5, 5, T)

    def series(x):
        return tuple(_r(v) for v in x)

    zeros = tuple(0.0 for _ in range(T))
    resources = [
        Resource("gas", ResourceKind.FUEL),
        Resource("biomethane", ResourceKind.FUEL), Resource("biomass", ResourceKind.FUEL),
        Resource("heat", ResourceKind.HEAT), Resource("power", ResourceKind.POWER),
    ]
    # the gas and syngas markets both sell into a hub feeding the heating plant and CHP 1
    units = {
        "heating_plant": ("gas", None, 0.15, 900.0, 0, 0),
        "chp_gas": ("gas", 0.9, 0.3, 60.0, 2, 2),
        "chp_biogas": ("biomethane", 0.8, 0.3, 20.0, 2, 2),
        "chp_biomass": ("biomass", 0.45, 0.3, 400.0, 3, 2),
    }
    nodes: dict = {
        "market_gas": Market("gas", series(gas_price), zeros, 0.201),
        "market_syngas": Market("gas", series(gas_price + 4), zeros, 0.25),
        "market_biomethane": Market("biomethane", series(np.full(T, 62.0)), zeros, 0.0),
        "market_biomass": Market("biomass", series(np.full(T, 21.0)), zeros, 0.0),
        "market_power": Market("power", series(power_price), series(0.9 * power_price), 0.366),
        "gas_hub": Balance(),
    }
    arcs = []
    caps = {}
    for u, (fuel, ratio, min_frac, startup, up, down) in units.items():
        heat_max = BERLIN_SHARES[u] * Q
        resources += chain_resources(u)
        ramp = _r(0.6 * heat_max) if u == "heating_plant" else None
        # the mixing hub converts both gases into one fuel stream
        stages = _chain(fuel, heat_max, min_frac, ratio, u, startup, up, down, ramp)
        nodes[u] = GeneratingUnit(subcomponents=stages)
        caps[u] = stages[0].unit.conversions[0].curve.domain[1]
    # the published shares sum to 99.9 %, so the storage is sized from the actual total
    total_heat = sum(BERLIN_SHARES.values()) * Q
    nodes.update({
        "pump": Balance(),
        "heat_bus": Balance(),
        "power_bus": Balance(),
        "heat_demand": Demand("heat", series(demand)),
        "pump_drive": Demand("power", series(np.full(T, 0.01 * Q))),
        "storage": Storage("heat", loss=0.995, load_eff=0.98, unload_eff=1.0, level_min=0.0,
                           level_max=_r(STORAGE_SHARE * total_heat * 1.0),
                           initial_level=_r(0.3 * STORAGE_SHARE * total_heat)),
    })
    big = _r(2 * Q)
    hub_cap = _r(caps["heating_plant"] + caps["chp_gas"])
    arcs += [
        Arc(default_arc_id("market_gas", "gas_hub"), "market_gas", "gas_hub", "gas", hub_cap),
        Arc(default_arc_id("market_syngas", "gas_hub"), "market_syngas", "gas_hub", "gas", hub_cap),
        Arc(default_arc_id("gas_hub", "heating_plant"), "gas_hub", "heating_plant", "gas", caps["heating_plant"]),
        Arc(default_arc_id("gas_hub", "chp_gas"), "gas_hub", "chp_gas", "gas", caps["chp_gas"]),
        Arc(default_arc_id("market_biomethane", "chp_biogas"), "market_biomethane", "chp_biogas", "biomethane", caps["chp_biogas"]),
        Arc(default_arc_id("market_biomass", "chp_biomass"), "market_biomass", "chp_biomass", "biomass", caps["chp_biomass"]),
    ]
    for u in units:
        arcs.append(Arc(default_arc_id(u, "pump"), u, "pump", "heat", big))
    for u in ("chp_gas", "chp_biogas", "chp_biomass"):
        arcs.append(Arc(default_arc_id(u, "power_bus"), u, "power_bus", "power", big))
    arcs += [
        Arc(default_arc_id("pump", "heat_bus"), "pump", "heat_bus", "heat", big),
        Arc(default_arc_id("heat_bus", "heat_demand"), "heat_bus", "heat_demand", "heat", big),
        Arc(default_arc_id("heat_bus", "storage"), "heat_bus", "storage", "heat", big),
        Arc(default_arc_id("storage", "heat_bus"), "storage", "heat_bus", "heat", big),
        Arc(default_arc_id("market_power", "power_bus"), "market_power", "power_bus", "power", big),
        Arc(default_arc_id("power_bus", "market_power"), "power_bus", "market_power", "power", big),
        Arc(default_arc_id("power_bus", "pump_drive"), "power_bus", "pump_drive", "power", big),
    ]
    containers = (
        Container("site_hp", ("heating_plant",), "gas_hub/heating_plant", "heating_plant/pump"),
        Container("site_storage", ("storage",), "heat_bus/storage", "storage/heat_bus"),
    )
    name = f"berlin_dh_{spec.season}_{spec.rng_seed}"
    g = NetworkGraph(tuple(resources), nodes, tuple(arcs), TimeGrid(T, spec.step_hours), containers, name)
    return g, Bounds(flow=Bound(0.0, big))


def berlin_total_heat_capacity(g: NetworkGraph) -> float:
    return sum(unit_heat_capacity(n) for n in g.nodes.values() if isinstance(n, GeneratingUnit))


def unit_heat_capacity(unit: GeneratingUnit) -> float:
    last = unit.subcomponents[-1].unit if unit.subcomponents else unit
    for c in last.conversions:
        if c.resource_out == "heat":
            return c.curve.range[1]
    return 0.0


def generate_instance(spec: ScenarioSpec):
    """Berlin-like instance as an :class:`InstanceFile` document."""
    from .instance import graph_to_document

    g, bounds = berlin_graph(spec)
    return graph_to_document(g, bounds, synthetic=True)


# --------------------------------------------------------------------------
# random corpus


@dataclass(frozen=True)
class CorpusSpec:
    units: tuple[int, int] = (2, 6)
    containers: tuple[int, int] = (0, 2)
    chains: tuple[int, int] = (1, 2)
    storage: tuple[int, int] = (0, 1)
    steps: tuple[int, ...] = (4, 8, 12)


SMALL = CorpusSpec(units=(1, 2), containers=(0, 1), chains=(0, 1), storage=(0, 1), steps=(2, 3))


def _increasing(rng, lo: float, hi: float, count: int) -> list[float]:
    inner = sorted(rng.uniform(lo, hi, count - 2)) if count > 2 else []
    pts = [lo] + [float(x) for x in inner] + [hi]
    return [_r(x) for x in pts]


def _curve(rng, x_lo: float, x_hi: float, y_lo: float, y_hi: float, rho: int) -> PiecewiseLinear:
    while True:
        xs = _increasing(rng, x_lo, x_hi, rho)
        ys = _increasing(rng, y_lo, y_hi, rho)
        c = PiecewiseLinear(xs, ys)
        if not c.issues():
            return c


def random_instance(seed: int, spec: CorpusSpec = CorpusSpec()) -> tuple[NetworkGraph, Bounds]:
    """Seeded random unit-commitment network; always feasible through a backup heat market."""
    rng = np.random.default_rng(seed)
    T = int(rng.choice(spec.steps))
    n_units = int(rng.integers(spec.units[0], spec.units[1] + 1))
    n_chains = min(n_units, int(rng.integers(spec.chains[0], spec.chains[1] + 1)))
    has_storage = bool(rng.integers(spec.storage[0], spec.storage[1] + 1))
    resources = [Resource("gas", ResourceKind.FUEL), Resource("heat", ResourceKind.HEAT),
                 Resource("power", ResourceKind.POWER)]
    nodes: dict = {
        "gas_market": Market("gas", tuple(_r(x) for x in rng.uniform(20, 40, T)), (0.0,) * T,
                             _r(rng.uniform(0.15, 0.25))),
        "power_market": Market("power", tuple(_r(x) for x in rng.uniform(40, 90, T)),
                               tuple(_r(x) for x in rng.uniform(20, 40, T)), _r(rng.uniform(0.2, 0.5))),
        "backup_heat": Market("heat", tuple(_r(x) for x in rng.uniform(150, 200, T)), (0.0,) * T, 0.0),
        "heat_bus": Balance(),
    }
    arcs: list[Arc] = []
    containers: list[Container] = []
    container_budget = int(rng.integers(spec.containers[0], spec.containers[1] + 1))
    total_heat = 0.0
    for i in range(n_units):
        u = f"u{i}"
        heat_max = _r(rng.uniform(10, 60))
        total_heat += heat_max
        chp = bool(rng.random() < 0.4)
        rho = int(rng.integers(2, 4))
        up, down = int(rng.integers(0, 4)), int(rng.integers(0, 3))
        ramp = _r(rng.uniform(0.3, 1.0) * heat_max) if rng.random() < 0.4 else None
        startup = _r(rng.uniform(0, 50))
        init = int(rng.integers(0, 2))
        if i < n_chains:
            n_stages = int(rng.integers(2, 4))
            stages = []
            fuel_max = heat_max / 0.75
            x_lo, x_hi = _r(rng.uniform(0.2, 0.4) * fuel_max), _r(fuel_max)
            src, res_in = (x_lo, x_hi), "gas"
            for k in range(n_stages):
                last = k == n_stages - 1
                if last:
                    y_lo = _r(rng.uniform(0.25, 0.35) * heat_max)
                    convs = [Conversion(res_in, "heat", _curve(rng, *src, y_lo, heat_max, rho))]
                    if chp:
                        p_max = _r(rng.uniform(0.3, 0.6) * heat_max)
                        convs.append(Conversion(res_in, "power", _curve(rng, *src, _r(0.3 * p_max), p_max, 2)))
                    stage = GeneratingUnit(tuple(convs), min_up=up, min_down=down, ramp_up=ramp, ramp_down=ramp,
                                           initial_status=init)
                else:
                    mid = f"{u}_s{k}"
                    resources.append(Resource(mid, ResourceKind.HEAT))
                    y = (_r(src[0] * rng.uniform(0.85, 0.95)), _r(src[1] * rng.uniform(0.9, 0.98)))
                    stage = GeneratingUnit((Conversion(res_in, mid, _curve(rng, *src, *y, rho)),),
                                           startup_cost=startup if k == 0 else 0.0, initial_status=init)
                    src, res_in = y, mid
                stages.append(Stage(f"s{k}", stage))
            unit = GeneratingUnit(subcomponents=tuple(stages), initial_status=init)
            fuel_cap = x_hi
        else:
            fuel_max = heat_max / rng.uniform(0.8, 0.95)
            x_lo = _r(rng.uniform(0.0, 0.3) * fuel_max)
            y_lo = _r(x_lo * 0.85) if x_lo > 0 else 0.0
            convs = [Conversion("gas", "heat", _curve(rng, x_lo, _r(fuel_max), y_lo, heat_max, rho))]
            if chp:
                p_max = _r(rng.uniform(0.3, 0.6) * heat_max)
                convs.append(Conversion("gas", "power", _curve(rng, x_lo, _r(fuel_max), _r(y_lo * 0.4), p_max, 2)))
            unit = GeneratingUnit(tuple(convs), min_up=up, min_down=down, ramp_up=ramp, ramp_down=ramp,
                                  startup_cost=startup, initial_status=init)
            fuel_cap = _r(fuel_max)
        nodes[u] = unit
        fuel_arc = Arc(f"gas_market/{u}", "gas_market", u, "gas", _r(fuel_cap * 1.5))
        arcs.append(fuel_arc)
        if rng.random() < 0.4:
            link = f"{u}_link"
            nodes[link] = Balance()
            heat_arc = Arc(f"{u}/{link}", u, link, "heat", _r(heat_max * 2))
            arcs += [heat_arc, Arc(f"{link}/heat_bus", link, "heat_bus", "heat", _r(heat_max * 2))]
        else:
            heat_arc = Arc(f"{u}/heat_bus", u, "heat_bus", "heat", _r(heat_max * 2))
            arcs.append(heat_arc)
        if chp:
            arcs.append(Arc(f"{u}/power_market", u, "power_market", "power", _r(heat_max * 2)))
        elif len(containers) < container_budget:
            containers.append(Container(f"site{len(containers)}", (u,), fuel_arc.id, heat_arc.id))
    cap = _r(total_heat * 2 + 100)
    nodes["heat_demand"] = Demand("heat", tuple(_r(x) for x in rng.uniform(0.2, 0.9, T) * total_heat))
    arcs += [Arc("backup_heat/heat_bus", "backup_heat", "heat_bus", "heat", cap),
             Arc("heat_bus/heat_demand", "heat_bus", "heat_demand", "heat", cap)]
    if rng.random() < 0.5:
        nodes["power_demand"] = Demand("power", tuple(_r(x) for x in rng.uniform(0, 10, T)))
        arcs.append(Arc("power_market/power_demand", "power_market", "power_demand", "power", cap))
    if has_storage:
        size = _r(rng.uniform(0.2, 1.0) * total_heat)
        nodes["storage"] = Storage("heat", loss=_r(rng.uniform(0.95, 1.0)), load_eff=_r(rng.uniform(0.85, 1.0)),
                                   unload_eff=_r(rng.uniform(0.85, 1.0)), level_min=0.0, level_max=size,
                                   initial_level=_r(size * rng.uniform(0, 1)))
        arcs += [Arc("heat_bus/storage", "heat_bus", "storage", "heat", cap),
                 Arc("storage/heat_bus", "storage", "heat_bus", "heat", cap)]
    g = NetworkGraph(tuple(resources), nodes, tuple(arcs), TimeGrid(T, 1.0), tuple(containers), f"random_{seed}")
    return g, Bounds(flow=Bound(0.0, cap))


def corpus(count: int = 50, first_seed: int = 0, spec: CorpusSpec = CorpusSpec()) -> list[tuple[NetworkGraph, Bounds]]:
    return [random_instance(first_seed + i, spec) for i in range(count)]
