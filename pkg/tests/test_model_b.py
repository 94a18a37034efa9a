import numpy as np
import pytest

from conftest import GAS, HEAT, STEAM, arc, market_demand, staged_unit, two_stage, with_balance
from mesmix.errors import NotContractible, NotMergeable
from mesmix.generate import SMALL, CorpusSpec, random_instance
from mesmix.model_a import ModelAGraph, build_model_a
from mesmix.model_b import ModelBGraph, contract_balance, flatten, merge_units, replay_log
from mesmix.network import Balance, Conversion, Demand, GeneratingUnit, Market, NetworkGraph, TimeGrid
from mesmix.pwl import PiecewiseLinear, pwl_eval

V_CURVE = PiecewiseLinear([10, 100], [4, 40])  # slope 0.4
W_CURVE = PiecewiseLinear([4, 40], [3.6, 36])  # slope 0.9


def same_graph(g: NetworkGraph, h: NetworkGraph) -> bool:
    return dict(g.nodes) == dict(h.nodes) and set(g.arcs) == set(h.arcs)


def test_contract_balance_chain():
    g = with_balance()
    h, step = contract_balance(g, "bus")
    assert len(h.nodes) == len(g.nodes) - 1 and len(h.arcs) == len(g.arcs) - 1
    (merged,) = h.arcs
    assert (merged.id, merged.tail, merged.head, merged.capacity) == ("market/bus", "market", "demand", 30.0)
    assert step.kind == "ContractBalance" and step.removed_nodes == ("bus",)


def test_contract_balance_with_two_in_arcs():
    g = with_balance()
    g = g.replace(nodes={**g.nodes, "m2": Market("heat", (1.0,), (0.0,), 0.0)}, arcs=g.arcs + (arc("m2", "bus", "heat"),))
    with pytest.raises(NotContractible):
        contract_balance(g, "bus")


def test_contract_non_balance():
    with pytest.raises(NotContractible):
        contract_balance(with_balance(), "market")


def test_merge_linear_chain_multiplies_slopes():
    g = two_stage(V_CURVE, W_CURVE)
    h, step = merge_units(g, "turbine", "boiler")
    merged = h.nodes["turbine&boiler"]
    (conv,) = merged.conversions
    assert (conv.resource_in, conv.resource_out) == ("gas", "heat")
    assert conv.curve.slopes == pytest.approx((0.36,))
    xs = np.linspace(10, 100, 1000)
    oracle = [pwl_eval(W_CURVE, pwl_eval(V_CURVE, x)) for x in xs]
    assert np.max(np.abs([pwl_eval(conv.curve, x) for x in xs] - np.array(oracle))) <= 1e-12
    assert {a.id for a in h.arcs} == {"gas/turbine", "boiler/demand"}
    assert step.removed_nodes == ("turbine", "boiler")


def test_merge_rejects_second_in_arc():
    g = two_stage(V_CURVE, W_CURVE)
    g = g.replace(nodes={**g.nodes, "steam_market": Market("steam", (1.0,), (0.0,), 0.0)},
                  arcs=g.arcs + (arc("steam_market", "boiler", "steam"),))
    with pytest.raises(NotMergeable):
        merge_units(g, "turbine", "boiler")


def test_merge_rejects_zero_minimum_load():
    g = two_stage(V_CURVE, PiecewiseLinear([0, 40], [0, 36]))
    with pytest.raises(NotMergeable):
        merge_units(g, "turbine", "boiler")


def test_merge_rejects_binding_link_capacity():
    g = two_stage(V_CURVE, W_CURVE)
    g = g.replace(arcs=tuple(a if a.id != "turbine/boiler" else arc("turbine", "boiler", "steam", 30.0) for a in g.arcs))
    with pytest.raises(NotMergeable):
        merge_units(g, "turbine", "boiler")


def test_merge_rejects_domain_mismatch():
    g = two_stage(V_CURVE, PiecewiseLinear([5, 40], [4.5, 36]))
    with pytest.raises(NotMergeable):
        merge_units(g, "turbine", "boiler")


@pytest.mark.parametrize("v_up,w_up,expected", [(3, 5, 5), (5, 3, 5), (0, 2, 2)])
def test_merge_min_up_is_max(v_up, w_up, expected):
    g = two_stage(V_CURVE, W_CURVE, v={"min_up": v_up}, w={"min_up": w_up})
    h, _ = merge_units(g, "turbine", "boiler")
    assert h.nodes["turbine&boiler"].min_up == expected


def test_merge_sums_startup_costs():
    g = two_stage(V_CURVE, W_CURVE, v={"startup_cost": 4.0}, w={"startup_cost": 1.5})
    h, _ = merge_units(g, "turbine", "boiler")
    assert h.nodes["turbine&boiler"].startup_cost == 5.5


def test_flatten_market_demand():
    mb = flatten(build_model_a(market_demand()))
    assert len(mb.base.nodes) == 2 and len(mb.base.arcs) == 1
    assert not any(a.info for a in mb.base.arcs)
    assert {(t.node, t.term) for t in mb.objective_terms} == {("market", "purchase"), ("market", "emission")}


def test_flatten_staged_unit_merges_whole_chain():
    mb = flatten(build_model_a(staged_unit()))
    units = [v for v, n in mb.base.nodes.items() if isinstance(n, GeneratingUnit)]
    assert units == ["site"]
    assert mb.mu == 2
    assert mb.merged_units["site"] == ("site.gas_turbine", "site.heat_boiler", "site.steam_turbine")
    unit = mb.base.nodes["site"]
    assert unit.min_up == 2 and unit.startup_cost == 5.0
    # the 3-point first curve survives both compositions
    assert unit.conversions[0].curve.breakpoints == 3


def test_flatten_of_flat_graph_is_identity():
    g = market_demand()
    mb = flatten(ModelAGraph.lift(g))
    assert same_graph(mb.base, g)
    assert mb.contraction_log == ()


def test_flatten_container_removes_boundary():
    from test_model_a import site

    ma = build_model_a(site(True))
    mb = flatten(ma)
    (step,) = [s for s in mb.contraction_log if s.kind == "FlattenContainer"]
    assert set(step.removed_nodes) == {"site1.in", "site1.out"}
    assert len(step.removed_arcs) == 4 and len(step.added_arcs) == 2
    assert same_graph(mb.base, flatten(build_model_a(site(False))).base)


@pytest.mark.parametrize("seed", range(10))
def test_replay_reproduces_flatten(seed):
    g, _ = random_instance(seed, SMALL if seed % 2 else CorpusSpec())
    ma = build_model_a(g)
    mb = flatten(ma)
    replayed = replay_log(ma.base, mb.contraction_log)
    assert same_graph(replayed, mb.base)
    assert list(replayed.nodes) == list(mb.base.nodes)


@pytest.mark.parametrize("seed", range(10))
def test_flatten_is_idempotent(seed):
    g, _ = random_instance(seed)
    mb = flatten(build_model_a(g))
    again = flatten(ModelAGraph.lift(mb.base, mb.objective_terms))
    assert same_graph(again.base, mb.base)
    assert again.contraction_log == ()


def test_log_json_is_deterministic():
    g, _ = random_instance(3)
    assert flatten(build_model_a(g)).log_json() == flatten(build_model_a(g)).log_json()
