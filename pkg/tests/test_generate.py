import pytest

from mesmix.generate import (
    SMALL,
    CorpusSpec,
    ScenarioSpec,
    berlin_graph,
    berlin_total_heat_capacity,
    random_instance,
    unit_heat_capacity,
)
from mesmix.instance import dump_instance
from mesmix.network import Demand, GeneratingUnit, Market, Storage, validate_instance

# published capacity shares of the four units and the storage size (fraction of hourly heat capacity)
PUBLISHED_SHARES = {"heating_plant": 0.816, "chp_biomass": 0.168, "chp_gas": 0.013, "chp_biogas": 0.002}
PUBLISHED_STORAGE = 0.8474


@pytest.fixture(scope="module", params=["onset", "midseason", "conclusion"])
def berlin(request):
    return berlin_graph(ScenarioSpec(season=request.param))


def test_berlin_is_valid(berlin):
    g, _ = berlin
    assert [v for v in validate_instance(g) if v.severity == "error"] == []
    assert g.grid.step_count == 186 and g.grid.step_hours == 4.0


def test_berlin_shares(berlin):
    g, _ = berlin
    total = berlin_total_heat_capacity(g)
    shares = {v: unit_heat_capacity(n) / total for v, n in g.nodes.items() if isinstance(n, GeneratingUnit)}
    assert set(shares) == set(PUBLISHED_SHARES)
    # the published shares add up to 0.999, so normalised shares sit within 1e-3 of them
    for v, share in PUBLISHED_SHARES.items():
        assert shares[v] == pytest.approx(share, abs=1e-3)


def test_berlin_storage_ratio(berlin):
    g, _ = berlin
    (store,) = [n for n in g.nodes.values() if isinstance(n, Storage)]
    assert store.level_max / (berlin_total_heat_capacity(g) * 1.0) == pytest.approx(PUBLISHED_STORAGE, abs=1e-4)


def test_berlin_demand_peak(berlin):
    g, _ = berlin
    heat = [n for n in g.nodes.values() if isinstance(n, Demand) and n.resource == "heat"]
    assert max(max(d.demand) for d in heat) <= 0.95 * berlin_total_heat_capacity(g) + 1e-9


def test_berlin_topology(berlin):
    g, _ = berlin
    markets = {v for v, n in g.nodes.items() if isinstance(n, Market)}
    assert len(markets) == 5
    assert sum(isinstance(n, GeneratingUnit) and len(n.subcomponents) == 3 for n in g.nodes.values()) == 4


def test_berlin_deterministic():
    spec = ScenarioSpec(season="onset", rng_seed=1)
    assert dump_instance(*berlin_graph(spec), synthetic=True) == dump_instance(*berlin_graph(spec), synthetic=True)


def test_berlin_seasons_differ():
    a, _ = berlin_graph(ScenarioSpec(season="onset"))
    b, _ = berlin_graph(ScenarioSpec(season="midseason"))
    assert a.nodes["heat_demand"].demand != b.nodes["heat_demand"].demand


@pytest.mark.parametrize("seed", range(50))
def test_corpus_instances_valid(seed):
    g, _ = random_instance(seed)
    spec = CorpusSpec()
    units = [n for n in g.nodes.values() if isinstance(n, GeneratingUnit)]
    assert spec.units[0] <= len(units) <= spec.units[1]
    assert len(g.containers) <= spec.containers[1]
    assert g.grid.step_count in spec.steps
    assert [v for v in validate_instance(g) if v.severity == "error"] == []


def test_corpus_has_chains_and_containers():
    graphs = [random_instance(s)[0] for s in range(50)]
    assert all(any(isinstance(n, GeneratingUnit) and n.subcomponents for n in g.nodes.values()) for g in graphs)
    assert any(g.containers for g in graphs)
    assert any(isinstance(n, Storage) for g in graphs for n in g.nodes.values())


def test_small_corpus_is_small():
    for s in range(10):
        g, _ = random_instance(s, SMALL)
        assert g.grid.step_count in SMALL.steps
