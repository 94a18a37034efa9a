"""Small hand-built networks shared by the test modules."""

from __future__ import annotations

import pytest

from mesmix.network import (
    Arc,
    Balance,
    Bound,
    Bounds,
    Conversion,
    Demand,
    GeneratingUnit,
    Market,
    NetworkGraph,
    Resource,
    ResourceKind,
    Stage,
    TimeGrid,
)
from mesmix.pwl import PiecewiseLinear

GAS = Resource("gas", ResourceKind.FUEL)
HEAT = Resource("heat", ResourceKind.HEAT)
POWER = Resource("power", ResourceKind.POWER)
STEAM = Resource("steam", ResourceKind.HEAT)

BOUNDS = Bounds(flow=Bound(0.0, 1000.0))


def arc(tail: str, head: str, resource: str, capacity: float | None = None) -> Arc:
    return Arc(f"{tail}/{head}", tail, head, resource, capacity)


def market_demand(T: int = 1, price: float = 1.0, demand: float = 5.0) -> NetworkGraph:
    """One heat market feeding one heat demand over a single arc."""
    nodes = {"market": Market("heat", (price,) * T, (0.0,) * T, 0.2), "demand": Demand("heat", (demand,) * T)}
    return NetworkGraph((HEAT,), nodes, (arc("market", "demand", "heat"),), TimeGrid(T), name="market_demand")


def single_unit(T: int = 1, demand: float = 5.0, fuel_price: float = 1.0, slope: float = 0.5,
                fuel_max: float = 20.0, min_fuel: float = 0.0, **unit) -> NetworkGraph:
    curve = PiecewiseLinear([min_fuel, fuel_max], [slope * min_fuel, slope * fuel_max])
    nodes = {
        "gas": Market("gas", (fuel_price,) * T, (0.0,) * T, 0.2),
        "boiler": GeneratingUnit((Conversion("gas", "heat", curve),), **unit),
        "demand": Demand("heat", (demand,) * T),
    }
    arcs = (arc("gas", "boiler", "gas"), arc("boiler", "demand", "heat"))
    return NetworkGraph((GAS, HEAT), nodes, arcs, TimeGrid(T), name="single_unit")


def two_stage(v_curve: PiecewiseLinear, w_curve: PiecewiseLinear, T: int = 1, demand: float = 10.0,
              v: dict | None = None, w: dict | None = None) -> NetworkGraph:
    """gas -> turbine (gas->steam) -> boiler (steam->heat) -> demand, as flat units."""
    nodes = {
        "gas": Market("gas", (1.0,) * T, (0.0,) * T, 0.2),
        "turbine": GeneratingUnit((Conversion("gas", "steam", v_curve),), **(v or {})),
        "boiler": GeneratingUnit((Conversion("steam", "heat", w_curve),), **(w or {})),
        "demand": Demand("heat", (demand,) * T),
    }
    arcs = (arc("gas", "turbine", "gas"), arc("turbine", "boiler", "steam", 1000.0), arc("boiler", "demand", "heat"))
    return NetworkGraph((GAS, HEAT, STEAM), nodes, arcs, TimeGrid(T), name="two_stage")


def staged_unit(T: int = 1) -> NetworkGraph:
    """A unit with three subcomponents: gas turbine -> heat boiler -> steam turbine."""
    hot = Resource("hot", ResourceKind.HEAT)
    stages = (
        Stage("gas_turbine", GeneratingUnit((Conversion("gas", "steam", PiecewiseLinear([10, 50, 100], [4, 22, 40])),),
                                            startup_cost=5.0)),
        Stage("heat_boiler", GeneratingUnit((Conversion("steam", "hot", PiecewiseLinear([4, 40], [3.6, 36])),))),
        Stage("steam_turbine", GeneratingUnit((Conversion("hot", "heat", PiecewiseLinear([3.6, 36], [3.0, 30])),),
                                              min_up=2)),
    )
    nodes = {
        "gas": Market("gas", (1.0,) * T, (0.0,) * T, 0.2),
        "site": GeneratingUnit(subcomponents=stages),
        "demand": Demand("heat", (12.0,) * T),
    }
    arcs = (arc("gas", "site", "gas"), arc("site", "demand", "heat"))
    return NetworkGraph((GAS, HEAT, STEAM, hot), nodes, arcs, TimeGrid(T), name="staged")


def with_balance(T: int = 1) -> NetworkGraph:
    nodes = {"market": Market("heat", (1.0,) * T, (0.0,) * T, 0.0), "bus": Balance(), "demand": Demand("heat", (5.0,) * T)}
    arcs = (arc("market", "bus", "heat", 50.0), arc("bus", "demand", "heat", 30.0))
    return NetworkGraph((HEAT,), nodes, arcs, TimeGrid(T), name="with_balance")


@pytest.fixture
def bounds() -> Bounds:
    return BOUNDS


# acceptance lines, printed once at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


def record_criterion(key: str, passed: bool, detail: str) -> None:
    line = f"criterion {key}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split()[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
