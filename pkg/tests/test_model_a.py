import pytest

from conftest import GAS, HEAT, POWER, arc, market_demand, single_unit, staged_unit
from mesmix.errors import TemplateMismatch
from mesmix.model_a import (
    ModelAGraph,
    build_model_a,
    enumerate_port_variables,
    objective_node_id,
    objective_terms,
)
from mesmix.network import (
    Balance,
    Container,
    Conversion,
    Demand,
    GeneratingUnit,
    Market,
    NetworkGraph,
    ObjectiveNode,
    Resource,
    ResourceKind,
    TimeGrid,
)
from mesmix.pwl import PiecewiseLinear


def site(with_container: bool) -> NetworkGraph:
    """Five units in sequence, optionally wrapped in one container."""
    chain = ["gas", "s1", "s2", "s3", "s4", "heat"]
    resources = [GAS, HEAT] + [Resource(r, ResourceKind.HEAT) for r in chain[1:-1]]
    nodes = {"market": Market("gas", (1.0,), (0.0,), 0.1)}
    arcs = [arc("market", "u0", "gas")]
    for i in range(5):
        lo, hi = 10.0 * 0.9 ** i, 100.0 * 0.9 ** i
        nodes[f"u{i}"] = GeneratingUnit((Conversion(chain[i], chain[i + 1], PiecewiseLinear([lo, hi], [0.9 * lo, 0.9 * hi])),))
        if i < 4:
            arcs.append(arc(f"u{i}", f"u{i + 1}", chain[i + 1], 1000.0))
    nodes["demand"] = Demand("heat", (20.0,))
    arcs.append(arc("u4", "demand", "heat"))
    containers = (Container("site1", tuple(f"u{i}" for i in range(5)), "market/u0", "u4/demand"),) if with_container else ()
    return NetworkGraph(tuple(resources), nodes, tuple(arcs), TimeGrid(1), containers, "site")


def test_market_demand_information_transport():
    ma = build_model_a(market_demand())
    g = ma.base
    assert len(g.nodes) == 2 + 3
    assert [v for v, n in g.nodes.items() if isinstance(n, ObjectiveNode)] == [objective_node_id(k) for k in (1, 2, 3)]
    info = [a for a in g.arcs if a.info is not None]
    assert {(a.tail, a.head, a.info.term) for a in info} == {
        ("market", "objective.cost", "purchase"),
        ("market", "objective.emission", "emission"),
    }
    assert ma.info_arcs == 2 and ma.info_nodes == 3


def test_container_adds_two_nodes_two_arcs():
    flat, wrapped = build_model_a(site(False)), build_model_a(site(True))
    assert len(wrapped.base.nodes) - len(flat.base.nodes) == 2
    assert len(wrapped.base.arcs) - len(flat.base.arcs) == 2
    assert {"site1.in", "site1.out"} <= set(wrapped.base.nodes)
    assert isinstance(wrapped.base.nodes["site1.in"], Balance)


def test_container_keeps_outer_arc_ids():
    g = build_model_a(site(True)).base
    am = g.arc_map
    assert (am["market/u0"].tail, am["market/u0"].head) == ("market", "site1.in")
    assert (am["u4/demand"].tail, am["u4/demand"].head) == ("u4", "site1.out")


def test_chp_without_power_arc_is_rejected():
    curve = PiecewiseLinear([0, 10], [0, 5])
    g = single_unit()
    chp = GeneratingUnit((Conversion("gas", "heat", curve), Conversion("gas", "power", curve)))
    g = g.replace(nodes={**g.nodes, "boiler": chp}, resources=g.resources + (POWER,))
    with pytest.raises(TemplateMismatch):
        build_model_a(g)


def test_unit_with_two_heat_arcs_is_rejected():
    g = single_unit()
    g = g.replace(nodes={**g.nodes, "extra": Demand("heat", (0.0,))},
                  arcs=g.arcs + (arc("boiler", "extra", "heat"),))
    with pytest.raises(TemplateMismatch):
        build_model_a(g)


def test_subcomponents_are_expanded():
    ma = build_model_a(staged_unit())
    units = [v for v, n in ma.base.nodes.items() if isinstance(n, GeneratingUnit)]
    assert units == ["site.gas_turbine", "site.heat_boiler", "site.steam_turbine"]
    assert ma.subcomponents == 2  # nodes added by the expansion
    assert "site.gas_turbine/site.heat_boiler" in ma.base.arc_map


def test_aggregation_for_several_contributors():
    g = market_demand()
    g = g.replace(nodes={**g.nodes, "market2": Market("heat", (2.0,), (0.0,), 0.0), "bus": Balance()},
                  arcs=(arc("market", "bus", "heat"), arc("market2", "bus", "heat"), arc("bus", "demand", "heat")))
    ma = build_model_a(g)
    am = ma.base.arc_map
    assert "objective.cost.pos" in ma.base.nodes
    assert am["objective.cost.pos/objective.cost"].info.term == "aggregate"
    # a single emission contributor goes straight to the objective node
    assert "market/objective.emission" in am


def test_objective_terms_for_chp():
    curve = PiecewiseLinear([0, 10], [0, 5])
    g = single_unit()
    chp = GeneratingUnit((Conversion("gas", "heat", curve), Conversion("gas", "power", curve)), startup_cost=3.0)
    g = g.replace(nodes={**g.nodes, "boiler": chp, "grid": Market("power", (0.0,), (1.0,), 0.0)},
                  resources=g.resources + (POWER,), arcs=g.arcs + (arc("boiler", "grid", "power"),))
    terms = {(t.node, t.objective, t.sign, t.term) for t in objective_terms(g)}
    assert ("boiler", 3, -1, "chp_heat") in terms
    assert ("boiler", 1, +1, "startup") in terms
    assert ("grid", 1, -1, "sale") in terms


@pytest.mark.parametrize("n_arcs,T,expected", [(1, 3, 6), (171, 1, 342), (0, 1, 0)])
def test_port_descriptor_count(n_arcs, T, expected):
    if n_arcs == 0:
        g = NetworkGraph.empty(T)
    else:
        # market -> (n_arcs - 1) balances in a row -> demand
        chain = ["market"] + [f"b{i}" for i in range(n_arcs - 1)] + ["demand"]
        nodes = {"market": Market("heat", (1.0,) * T, (0.0,) * T, 0.0), "demand": Demand("heat", (1.0,) * T)}
        nodes.update({v: Balance() for v in chain[1:-1]})
        arcs = tuple(arc(a, b, "heat") for a, b in zip(chain, chain[1:]))
        g = NetworkGraph((HEAT,), nodes, arcs, TimeGrid(T))
    descriptors = enumerate_port_variables(ModelAGraph.lift(g))
    assert len(descriptors) == expected
    assert len({d.name for d in descriptors}) == expected


def test_every_arc_bound_to_two_ports():
    ma = build_model_a(staged_unit())
    assert set(ma.port_bindings) == {a.id for a in ma.base.arcs}
    for a in ma.base.arcs:
        out_port, in_port = ma.port_bindings[a.id]
        assert (out_port.owner, out_port.direction) == (a.tail, "out")
        assert (in_port.owner, in_port.direction) == (a.head, "in")
