"""Monetized flood impacts: direct damage, delay costs, cancellation costs.

Direct damage prices each link's reconstruction from a construction cost
table and a depth-damage curve per road class. Delays and cancellations are
priced with per-mode values of time; cancelled trips cost a fixed fraction
(default 0.8) of the VoT applied to the no-rain baseline duration. All costs
aggregate to the trip's origin zone / the link's zone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .flood import FloodField
from .network import Link, MultimodalNetwork, RouteResult, Trip, all_link_depths


class CostModelError(ValueError):
    """Invalid cost model input."""


@dataclass(frozen=True)
class ConstructionCosts:
    base_cost_per_m: dict        # road_class -> currency per metre
    per_lane_factor: float       # extra fraction of base per lane beyond the first
    lighting_per_m: float
    signals_per_link: float

    def validate(self) -> None:
        if any(v < 0 for v in self.base_cost_per_m.values()):
            raise CostModelError("base costs must be non-negative")
        if self.per_lane_factor < 0 or self.lighting_per_m < 0 \
                or self.signals_per_link < 0:
            raise CostModelError("cost add-ons must be non-negative")


@dataclass(frozen=True)
class DamageCurve:
    """Piecewise-linear depth (mm) -> damage fraction, anchored at (0, 0)."""

    points: tuple  # ((depth_mm, fraction), ...) ascending depth

    def validate(self) -> None:
        if not self.points or self.points[0] != (0.0, 0.0):
            raise CostModelError("damage curve must start at (0, 0)")
        depths = [p[0] for p in self.points]
        fracs = [p[1] for p in self.points]
        if depths != sorted(depths) or len(set(depths)) != len(depths):
            raise CostModelError("damage curve depths must be strictly increasing")
        if any(b < a for a, b in zip(fracs, fracs[1:])):
            raise CostModelError("damage curve must be non-decreasing")
        if fracs[-1] > 1.0 or any(f < 0 for f in fracs):
            raise CostModelError("damage fractions must be within [0, 1]")


@dataclass(frozen=True)
class CostModel:
    construction: ConstructionCosts
    damage_curves: dict       # road_class -> DamageCurve
    vot_per_hour: dict        # mode -> currency per hour
    cancellation_factor: float = 0.8

    def validate(self) -> None:
        self.construction.validate()
        for curve in self.damage_curves.values():
            curve.validate()
        if any(v < 0 for v in self.vot_per_hour.values()):
            raise CostModelError("VoT values must be non-negative")
        if not 0.0 <= self.cancellation_factor <= 1.0:
            raise CostModelError("cancellation_factor must be in [0, 1]")


@dataclass
class ImpactSummary:
    """Per-zone monetary terms and QoL plus trip counters."""

    zone_ids: tuple
    I: dict = field(default_factory=dict)  # direct damage
    D: dict = field(default_factory=dict)  # delay cost
    C: dict = field(default_factory=dict)  # cancellation cost
    Q: dict = field(default_factory=dict)  # QoL index
    completed: dict = field(default_factory=dict)
    delayed: dict = field(default_factory=dict)
    cancelled: dict = field(default_factory=dict)


def link_construction_cost(link: Link, cost_model: CostModel) -> float:
    """length * base(road_class) * lane multiplier, plus lighting and signal
    add-ons. Lane multiplier is 1 + (lanes - 1) * per_lane_factor."""
    cc = cost_model.construction
    if link.road_class not in cc.base_cost_per_m:
        raise CostModelError(f"no base cost for road_class {link.road_class}")
    if link.lanes < 1:
        raise CostModelError(f"link {link.id}: lanes must be >= 1")
    lane_mult = 1.0 + (link.lanes - 1) * cc.per_lane_factor
    cost = link.length_m * cc.base_cost_per_m[link.road_class] * lane_mult
    if link.has_lighting:
        cost += cc.lighting_per_m * link.length_m
    if link.has_signals:
        cost += cc.signals_per_link
    return cost


def damage_fraction(curve: DamageCurve, depth_mm: float) -> float:
    """Linear interpolation on the piecewise curve, clamped at the ends."""
    if depth_mm < 0:
        raise CostModelError("depth must be non-negative")
    xs = [p[0] for p in curve.points]
    ys = [p[1] for p in curve.points]
    return float(np.interp(depth_mm, xs, ys))


def direct_damage_by_zone(
    network: MultimodalNetwork,
    flood: Optional[FloodField],
    cost_model: CostModel,
    zone_ids: Sequence[int],
) -> dict:
    """I_i = sum over the zone's links of construction cost x damage fraction
    at the link's (max-over-geometry) water depth."""
    out = {z: 0.0 for z in zone_ids}
    depths = all_link_depths(network, flood)
    for lid in sorted(network.links):
        link = network.links[lid]
        if link.zone_id is None:
            raise CostModelError(f"link {lid} has no zone")
        depth = depths[lid]
        if depth <= 0:
            continue
        curve = cost_model.damage_curves.get(link.road_class)
        if curve is None:
            raise CostModelError(f"no damage curve for road_class {link.road_class}")
        out[link.zone_id] += link_construction_cost(link, cost_model) * \
            damage_fraction(curve, depth)
    return out


def delay_cost_by_zone(
    results: Sequence[RouteResult],
    trips: Sequence[Trip],
    cost_model: CostModel,
    zone_ids: Sequence[int],
) -> dict:
    """D_i = delay hours x VoT(mode), attributed to the trip's origin zone."""
    out = {z: 0.0 for z in zone_ids}
    for res, trip in zip(results, trips):
        if not res.completed:
            continue
        delay_s = res.travel_time_s - res.baseline_time_s
        if delay_s > 0:
            out[trip.origin_zone] += delay_s / 3600.0 * \
                cost_model.vot_per_hour[trip.mode]
    return out


def cancellation_cost_by_zone(
    results: Sequence[RouteResult],
    trips: Sequence[Trip],
    cost_model: CostModel,
    zone_ids: Sequence[int],
) -> dict:
    """C_i = cancellation_factor x VoT(mode) x baseline hours, per cancelled
    trip, attributed to the trip's origin zone."""
    out = {z: 0.0 for z in zone_ids}
    for res, trip in zip(results, trips):
        if res.completed:
            continue
        out[trip.origin_zone] += cost_model.cancellation_factor * \
            cost_model.vot_per_hour[trip.mode] * res.baseline_time_s / 3600.0
    return out


def trip_counters(
    results: Sequence[RouteResult],
    trips: Sequence[Trip],
    zone_ids: Sequence[int],
) -> tuple:
    """(completed, delayed, cancelled) per origin zone."""
    completed = {z: 0 for z in zone_ids}
    delayed = {z: 0 for z in zone_ids}
    cancelled = {z: 0 for z in zone_ids}
    for res, trip in zip(results, trips):
        if res.completed:
            completed[trip.origin_zone] += 1
            if res.travel_time_s > res.baseline_time_s:
                delayed[trip.origin_zone] += 1
        else:
            cancelled[trip.origin_zone] += 1
    return completed, delayed, cancelled


def assemble_impacts(
    network: MultimodalNetwork,
    flood: Optional[FloodField],
    results: Sequence[RouteResult],
    trips: Sequence[Trip],
    qol_by_zone: Mapping[int, float],
    cost_model: CostModel,
    zone_ids: Sequence[int],
) -> ImpactSummary:
    zone_ids = tuple(sorted(zone_ids))
    completed, delayed, cancelled = trip_counters(results, trips, zone_ids)
    return ImpactSummary(
        zone_ids=zone_ids,
        I=direct_damage_by_zone(network, flood, cost_model, zone_ids),
        D=delay_cost_by_zone(results, trips, cost_model, zone_ids),
        C=cancellation_cost_by_zone(results, trips, cost_model, zone_ids),
        Q={z: qol_by_zone[z] for z in zone_ids},
        completed=completed,
        delayed=delayed,
        cancelled=cancelled,
    )
