"""Monetized impact terms against hand-computed arithmetic oracles."""

import pytest

from floodadapt.impacts import (ConstructionCosts, CostModel, CostModelError,
                                DamageCurve, assemble_impacts,
                                cancellation_cost_by_zone, damage_fraction,
                                delay_cost_by_zone, direct_damage_by_zone,
                                link_construction_cost, trip_counters)
from floodadapt.network import RouteResult, Trip

from .conftest import depth_field, make_link, make_network


def cost_model(per_lane_factor=0.0, lighting=0.0, signals=0.0,
               cancellation_factor=0.8):
    return CostModel(
        construction=ConstructionCosts(
            base_cost_per_m={"local": 500.0, "arterial": 1000.0},
            per_lane_factor=per_lane_factor, lighting_per_m=lighting,
            signals_per_link=signals),
        damage_curves={
            "local": DamageCurve(((0.0, 0.0), (500.0, 0.4), (1000.0, 1.0))),
            "arterial": DamageCurve(((0.0, 0.0), (500.0, 0.4), (1000.0, 1.0))),
        },
        vot_per_hour={"drive": 120.0, "cycle": 90.0, "walk": 80.0},
        cancellation_factor=cancellation_factor,
    )


def test_link_construction_cost_base():
    lk = make_link(0, 0, 1, 100.0, road_class="local")
    assert link_construction_cost(lk, cost_model()) == 50000.0


def test_link_construction_cost_lighting():
    lk = make_link(0, 0, 1, 100.0, road_class="local", lighting=True)
    assert link_construction_cost(lk, cost_model(lighting=20.0)) == 52000.0


def test_link_construction_cost_lanes_and_signals():
    lk = make_link(0, 0, 1, 100.0, road_class="local", lanes=3, signals=True)
    cm = cost_model(per_lane_factor=0.5, signals=10000.0)
    assert link_construction_cost(lk, cm) == 50000.0 * 2.0 + 10000.0


def test_link_construction_cost_errors():
    lk = make_link(0, 0, 1, 100.0, road_class="path")
    with pytest.raises(CostModelError, match="road_class"):
        link_construction_cost(lk, cost_model())
    bad = make_link(0, 0, 1, 100.0, road_class="local")
    object.__setattr__(bad, "lanes", 0)
    with pytest.raises(CostModelError, match="lanes"):
        link_construction_cost(bad, cost_model())


def test_damage_fraction_interpolation():
    curve = DamageCurve(((0.0, 0.0), (500.0, 0.4), (1000.0, 1.0)))
    curve.validate()
    assert damage_fraction(curve, 0.0) == 0.0
    assert damage_fraction(curve, 750.0) == pytest.approx(0.7)
    assert damage_fraction(curve, 2000.0) == 1.0
    with pytest.raises(CostModelError):
        damage_fraction(curve, -1.0)


def test_damage_curve_validation():
    with pytest.raises(CostModelError):
        DamageCurve(((100.0, 0.1),)).validate()  # not anchored at origin
    with pytest.raises(CostModelError):
        DamageCurve(((0.0, 0.0), (500.0, 0.5), (400.0, 0.6))).validate()
    with pytest.raises(CostModelError):
        DamageCurve(((0.0, 0.0), (500.0, 0.5), (1000.0, 0.2))).validate()
    with pytest.raises(CostModelError):
        DamageCurve(((0.0, 0.0), (500.0, 1.5))).validate()


def test_direct_damage_dry_network_zero():
    net = make_network(3, [(0, 0, 1, 100), (1, 1, 2, 100)])
    out = direct_damage_by_zone(net, None, cost_model(), [1, 2])
    assert out == {1: 0.0, 2: 0.0}


def test_direct_damage_single_flooded_link():
    net = make_network(3, [(0, 0, 1, 100), (1, 1, 2, 100)])
    flood = depth_field({0: 500.0}, n_links=2)
    out = direct_damage_by_zone(net, flood, cost_model(), [1, 2])
    assert out[1] == pytest.approx(50000.0 * 0.4)
    assert out[2] == 0.0


def test_direct_damage_three_zone_oracle():
    specs = [(0, 0, 1, 100), (1, 1, 2, 200), (2, 2, 3, 300)]
    nets = []
    net = make_network(4, specs)
    # reassign zones 1, 2, 3 per link
    for lid, z in ((0, 1), (1, 2), (2, 3)):
        object.__setattr__(net.links[lid], "zone_id", z)
    flood = depth_field({0: 250.0, 1: 500.0, 2: 1000.0})
    cm = cost_model()
    out = direct_damage_by_zone(net, flood, cm, [1, 2, 3])
    assert out[1] == pytest.approx(100 * 500.0 * 0.2)
    assert out[2] == pytest.approx(200 * 500.0 * 0.4)
    assert out[3] == pytest.approx(300 * 500.0 * 1.0)


def test_direct_damage_link_without_zone_rejected():
    net = make_network(2, [(0, 0, 1, 100)], zone_id=None)
    with pytest.raises(CostModelError, match="no zone"):
        direct_damage_by_zone(net, depth_field({0: 100.0}), cost_model(), [1])


def test_delay_cost_examples():
    trips = [Trip(0, 0, 1, "drive", 1, 2)]
    results = [RouteResult(0, "completed", baseline_time_s=1000.0,
                           travel_time_s=1600.0)]
    out = delay_cost_by_zone(results, trips, cost_model(), [1, 2])
    assert out[1] == pytest.approx(600.0 / 3600.0 * 120.0)  # 20
    assert out[2] == 0.0
    # no delay, no cost
    results = [RouteResult(0, "completed", baseline_time_s=1000.0,
                           travel_time_s=1000.0)]
    assert delay_cost_by_zone(results, trips, cost_model(), [1, 2]) == \
        {1: 0.0, 2: 0.0}


def test_cancellation_cost_examples():
    trips = [Trip(0, 0, 1, "drive", 1, 2)]
    results = [RouteResult(0, "cancelled", baseline_time_s=1800.0)]
    out = cancellation_cost_by_zone(results, trips, cost_model(), [1, 2])
    assert out[1] == pytest.approx(0.8 * 120.0 * 0.5)  # 48, exactly per spec
    assert out[2] == 0.0


def test_cancellation_attribution():
    trips = [Trip(0, 0, 1, "drive", 1, 2), Trip(1, 2, 3, "walk", 2, 1)]
    results = [RouteResult(0, "cancelled", baseline_time_s=3600.0),
               RouteResult(1, "cancelled", baseline_time_s=1800.0)]
    out = cancellation_cost_by_zone(results, trips, cost_model(), [1, 2])
    assert out[1] == pytest.approx(0.8 * 120.0)
    assert out[2] == pytest.approx(0.8 * 80.0 * 0.5)


def test_trip_counters_partition():
    trips = [Trip(i, 0, 1, "drive", 1 + i % 2, 1) for i in range(6)]
    results = [
        RouteResult(0, "completed", 100.0, travel_time_s=100.0),
        RouteResult(1, "completed", 100.0, travel_time_s=150.0),
        RouteResult(2, "cancelled", 100.0),
        RouteResult(3, "completed", 100.0, travel_time_s=100.0),
        RouteResult(4, "cancelled", 100.0),
        RouteResult(5, "completed", 100.0, travel_time_s=120.0),
    ]
    completed, delayed, cancelled = trip_counters(results, trips, [1, 2])
    assert sum(completed.values()) + sum(cancelled.values()) == 6
    assert completed == {1: 1, 2: 3}
    assert delayed == {1: 0, 2: 2}
    assert cancelled == {1: 2, 2: 0}


def test_assemble_impacts_fields():
    net = make_network(2, [(0, 0, 1, 100)])
    trips = [Trip(0, 0, 1, "drive", 1, 1)]
    results = [RouteResult(0, "completed", 100.0, travel_time_s=130.0)]
    s = assemble_impacts(net, None, results, trips, {1: 0.8}, cost_model(), [1])
    assert s.zone_ids == (1,)
    assert s.I[1] == 0.0
    assert s.D[1] == pytest.approx(30.0 / 3600.0 * 120.0)
    assert s.C[1] == 0.0
    assert s.Q[1] == 0.8
    assert s.completed[1] == 1 and s.delayed[1] == 1 and s.cancelled[1] == 0


def test_cost_model_validation():
    with pytest.raises(CostModelError):
        CostModel(
            construction=ConstructionCosts({"local": -1.0}, 0, 0, 0),
            damage_curves={}, vot_per_hour={}, cancellation_factor=0.8,
        ).validate()
    with pytest.raises(CostModelError):
        cm = cost_model(cancellation_factor=1.2)
        cm.validate()
