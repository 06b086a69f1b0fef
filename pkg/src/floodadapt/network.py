"""Multimodal street network, OD demand, and flood-aware routing.

Links are undirected (traversable both ways) and mode-tagged. Routing is
shortest travel time per mode with edge cost length / disrupted_speed, where
the disrupted speed comes from a per-mode depth-disruption polynomial with an
impassability cutoff. Ties between equal-time paths are broken by the
lexicographically smallest link-id sequence.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from shapely.geometry import Point, Polygon

from .flood import FloodField

MODES = ("drive", "cycle", "walk")
ROAD_CLASSES = ("motorway", "arterial", "local", "path")


class NetworkError(ValueError):
    """Invalid network data or routing input."""


@dataclass(frozen=True)
class NetworkNode:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Link:
    id: int
    from_node: int
    to_node: int
    length_m: float
    modes: frozenset
    free_speed_kmh: dict  # mode -> km/h, keys == modes
    lanes: int
    road_class: str
    has_lighting: bool
    has_signals: bool
    geometry: tuple  # ((x, y), ...) sample points, endpoints at minimum
    zone_id: Optional[int]

    def validate(self) -> None:
        if self.length_m <= 0:
            raise NetworkError(f"link {self.id}: length_m must be > 0")
        if self.lanes < 1:
            raise NetworkError(f"link {self.id}: lanes must be >= 1")
        if self.road_class not in ROAD_CLASSES:
            raise NetworkError(f"link {self.id}: unknown road_class {self.road_class}")
        unknown = self.modes - set(MODES)
        if unknown:
            raise NetworkError(f"link {self.id}: unknown mode tags {sorted(unknown)}")
        if not self.modes:
            raise NetworkError(f"link {self.id}: needs at least one mode")
        for m in self.modes:
            if self.free_speed_kmh.get(m, 0) <= 0:
                raise NetworkError(f"link {self.id}: free speed for {m} must be > 0")
        if len(self.geometry) == 0:
            raise NetworkError(f"link {self.id}: empty geometry")


@dataclass(frozen=True)
class Zone:
    id: int
    name: str
    population: int
    polygon: tuple  # closed ring of (x, y)
    shape: Polygon = field(compare=False, hash=False, default=None)

    def contains(self, x: float, y: float) -> bool:
        return self.shape.intersects(Point(x, y))


@dataclass(frozen=True)
class Trip:
    id: int
    origin_node: int
    dest_node: int
    mode: str
    origin_zone: int
    dest_zone: int


@dataclass(frozen=True)
class RouteResult:
    trip_id: int
    status: str  # "completed" | "cancelled"
    baseline_time_s: float
    travel_time_s: Optional[float] = None
    path_link_ids: Optional[tuple] = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


@dataclass(frozen=True)
class ModeCurve:
    """speed_kmh = poly(depth_mm), impassable at depth >= cutoff."""

    coefficients: tuple  # ascending order: c0 + c1*w + c2*w^2 + ...
    cutoff_depth_mm: float

    def validate(self) -> None:
        if self.cutoff_depth_mm <= 0:
            raise NetworkError("cutoff depth must be > 0")
        depths = np.arange(0.0, self.cutoff_depth_mm + 1.0)
        speeds = self._poly(depths)
        if speeds[0] <= 0:
            raise NetworkError("disruption curve must have speed(0) > 0")
        if np.any(np.diff(speeds) > 1e-9):
            raise NetworkError("disruption curve must be non-increasing in depth")

    def _poly(self, depth):
        return np.polynomial.polynomial.polyval(depth, np.asarray(self.coefficients))


# Default quadratic drive curve (depth in mm, speed in km/h); cycle and walk
# fall back to linear ramps hitting zero at their cutoffs.
DEFAULT_CURVES = {
    "drive": ModeCurve((86.9448, -0.5529, 0.0009), 300.0),
    "cycle": ModeCurve((20.0, -0.1), 200.0),
    "walk": ModeCurve((5.0, -0.0125), 400.0),
}


@dataclass(frozen=True)
class DepthDisruptionCurve:
    """Per-mode disruption curves."""

    per_mode: dict  # mode -> ModeCurve

    def validate(self) -> None:
        for mode in MODES:
            if mode not in self.per_mode:
                raise NetworkError(f"missing disruption curve for mode {mode}")
            self.per_mode[mode].validate()

    def curve(self, mode: str) -> ModeCurve:
        return self.per_mode[mode]


def default_curves() -> DepthDisruptionCurve:
    return DepthDisruptionCurve(dict(DEFAULT_CURVES))


def disrupted_speed(
    curves: DepthDisruptionCurve, mode: str, free_speed_kmh: float, depth_mm: float
) -> Optional[float]:
    """Speed on a link with standing water; None when impassable.

    Polynomial speed clamped to [0, free_speed]; zero speed is reported as
    impassable (it cannot be traversed in finite time).
    """
    if depth_mm < 0:
        raise NetworkError("depth must be non-negative")
    c = curves.curve(mode)
    if depth_mm >= c.cutoff_depth_mm:
        return None
    speed = min(free_speed_kmh, max(0.0, float(c._poly(depth_mm))))
    return None if speed <= 0.0 else speed


class MultimodalNetwork:
    """Validated node/link collection with per-mode routing structures."""

    def __init__(self, nodes: Iterable[NetworkNode], links: Iterable[Link]):
        self.nodes = {n.id: n for n in nodes}
        self.links = {}
        for link in links:
            link.validate()
            for end in (link.from_node, link.to_node):
                if end not in self.nodes:
                    raise NetworkError(
                        f"link {link.id} references missing node {end}"
                    )
            if link.id in self.links:
                raise NetworkError(f"duplicate link id {link.id}")
            self.links[link.id] = link
        self.node_ids = sorted(self.nodes)
        self.node_index = {nid: i for i, nid in enumerate(self.node_ids)}
        self._mode_cache: dict[str, dict] = {}
        self._sample_cache: dict[tuple, tuple] = {}

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def mode_links(self, mode: str) -> list[Link]:
        return [self.links[lid] for lid in sorted(self.links)
                if mode in self.links[lid].modes]

    def _mode_struct(self, mode: str) -> dict:
        """Directed edge arrays for one mode (each link both ways), sorted by
        (u, v, link id) with per-(u, v) group offsets for min-reduction."""
        if mode in self._mode_cache:
            return self._mode_cache[mode]
        links = self.mode_links(mode)
        u, v, lid, length, fspeed = [], [], [], [], []
        for lk in links:
            a, b = self.node_index[lk.from_node], self.node_index[lk.to_node]
            for s, t in ((a, b), (b, a)):
                u.append(s)
                v.append(t)
                lid.append(lk.id)
                length.append(lk.length_m)
                fspeed.append(lk.free_speed_kmh[mode])
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        lid = np.asarray(lid, dtype=np.int64)
        length = np.asarray(length, dtype=float)
        fspeed = np.asarray(fspeed, dtype=float)
        order = np.lexsort((lid, v, u))
        u, v, lid, length, fspeed = u[order], v[order], lid[order], length[order], fspeed[order]
        # per-link depth index: position of each edge's link in `links`
        link_pos = {lk.id: i for i, lk in enumerate(links)}
        depth_idx = np.asarray([link_pos[i] for i in lid], dtype=np.int64)
        if len(u):
            new_group = np.concatenate(([True], (u[1:] != u[:-1]) | (v[1:] != v[:-1])))
            group_starts = np.flatnonzero(new_group)
        else:
            group_starts = np.empty(0, dtype=np.int64)
        mode_nodes = np.zeros(self.n_nodes, dtype=bool)
        mode_nodes[u] = True
        struct = {
            "links": links,
            "u": u, "v": v, "lid": lid, "length": length, "fspeed": fspeed,
            "depth_idx": depth_idx, "group_starts": group_starts,
            "mode_nodes": mode_nodes,
        }
        self._mode_cache[mode] = struct
        return struct

    def mode_node_ids(self, mode: str) -> list[int]:
        """Node ids with at least one incident link allowing the mode."""
        s = self._mode_struct(mode)
        return [self.node_ids[i] for i in np.flatnonzero(s["mode_nodes"])]

    def mode_component_nodes(self, mode: str) -> list[int]:
        """Node ids of the largest connected component of the mode subgraph."""
        s = self._mode_struct(mode)
        n = self.n_nodes
        if not len(s["u"]):
            return []
        adj = csr_matrix((np.ones(len(s["u"])), (s["u"], s["v"])), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        labels = np.where(s["mode_nodes"], labels, -1)
        vals, counts = np.unique(labels[labels >= 0], return_counts=True)
        big = vals[np.argmax(counts)]
        return [self.node_ids[i] for i in np.flatnonzero(labels == big)]

    def link_sample_index(self, flood_geom) -> tuple:
        """(row, col) cell indices of every link geometry sample point plus
        per-link offsets, for max-depth reduction on a given grid geometry."""
        key = (flood_geom.origin, flood_geom.cell_size_m,
               flood_geom.n_rows, flood_geom.n_cols)
        if key in self._sample_cache:
            return self._sample_cache[key]
        x0, y0 = flood_geom.origin
        cs = flood_geom.cell_size_m
        pts, offsets = [], [0]
        for lid in sorted(self.links):
            pts.extend(self.links[lid].geometry)
            offsets.append(len(pts))
        pts = np.asarray(pts, dtype=float)
        col = np.floor((pts[:, 0] - x0) / cs).astype(np.int64)
        row = flood_geom.n_rows - 1 - np.floor((pts[:, 1] - y0) / cs).astype(np.int64)
        if (col < 0).any() or (col >= flood_geom.n_cols).any() \
                or (row < 0).any() or (row >= flood_geom.n_rows).any():
            raise NetworkError("link geometry outside flood grid extent")
        result = (row, col, np.asarray(offsets[:-1], dtype=np.int64),
                  [lid for lid in sorted(self.links)])
        self._sample_cache[key] = result
        return result


def link_depth(flood: FloodField, link: Link) -> float:
    """Max water depth (mm) over the link's geometry sample points."""
    from .flood import depth_at_point

    return max(depth_at_point(flood, x, y) for x, y in link.geometry)


def all_link_depths(network: MultimodalNetwork, flood: Optional[FloodField]) -> dict:
    """Depth per link id (mm); all zeros when flood is None."""
    if flood is None:
        return {lid: 0.0 for lid in network.links}
    row, col, offsets, lids = network.link_sample_index(flood)
    depths = flood.depth_mm[row, col]
    per_link = np.maximum.reduceat(depths, offsets) if len(depths) else depths
    return dict(zip(lids, per_link.tolist()))


def _edge_weights(struct: dict, curves: DepthDisruptionCurve,
                  depth_by_link: Optional[dict], mode: str) -> np.ndarray:
    """Travel time (s) per directed edge; inf where impassable.

    The no-flood case evaluates the curve at depth 0, so a zero-depth flood
    field yields exactly the baseline times.
    """
    c = curves.curve(mode)
    if depth_by_link is None:
        poly0 = float(np.polynomial.polynomial.polyval(
            0.0, np.asarray(c.coefficients)))
        speed = np.minimum(struct["fspeed"], max(0.0, poly0))
        return 3.6 * struct["length"] / speed
    depth = np.asarray([depth_by_link[i] for i in struct["lid"]], dtype=float)
    poly = np.polynomial.polynomial.polyval(depth, np.asarray(c.coefficients))
    speed = np.minimum(struct["fspeed"], np.maximum(0.0, poly))
    with np.errstate(divide="ignore"):
        t = 3.6 * struct["length"] / speed
    t[(depth >= c.cutoff_depth_mm) | (speed <= 0.0)] = np.inf
    return t


def _reduce_parallel(struct: dict, w: np.ndarray):
    """Keep, per (u, v) pair, the min-weight edge (smallest link id on ties)."""
    gs = struct["group_starts"]
    if not len(gs):
        return (np.empty(0, np.int64),) * 3 + (np.empty(0),)
    wmin = np.minimum.reduceat(w, gs)
    # edges sorted by (u, v, lid): first index in group attaining the min
    group_of = np.zeros(len(w), dtype=np.int64)
    group_of[gs[1:]] = 1
    group_of = np.cumsum(group_of)
    idx = np.flatnonzero(w == wmin[group_of])
    first = np.full(len(gs), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, group_of[idx], idx)
    return struct["u"][first], struct["v"][first], struct["lid"][first], w[first]


def _sssp(n_nodes: int, eu, ev, ew, origins: np.ndarray):
    """Multi-source Dijkstra via scipy; returns (dist, predecessors)."""
    finite = np.isfinite(ew)
    graph = csr_matrix((ew[finite], (eu[finite], ev[finite])),
                       shape=(n_nodes, n_nodes))
    dist, pred = dijkstra(graph, directed=True, indices=origins,
                          return_predecessors=True)
    return np.atleast_2d(dist), np.atleast_2d(pred)


def route_all(
    network: MultimodalNetwork,
    flood: Optional[FloodField],
    curves: DepthDisruptionCurve,
    trips: Sequence[Trip],
    include_paths: bool = True,
    baseline_times: Optional[dict] = None,
) -> list[RouteResult]:
    """Route every trip; order-preserving and identical to per-trip routing.

    Trips sharing a mode and origin reuse one shortest-path tree. When
    `baseline_times` (trip id -> seconds) is given, the no-flood pass is
    skipped for those trips.
    """
    results: dict[int, RouteResult] = {}
    depth_by_link = all_link_depths(network, flood) if flood is not None else None
    by_mode: dict[str, list[Trip]] = {}
    for tr in trips:
        if tr.mode not in MODES:
            raise NetworkError(f"trip {tr.id}: unknown mode {tr.mode}")
        by_mode.setdefault(tr.mode, []).append(tr)

    for mode, mode_trips in by_mode.items():
        struct = network._mode_struct(mode)
        for tr in mode_trips:
            for nid, role in ((tr.origin_node, "origin"), (tr.dest_node, "destination")):
                if nid not in network.node_index or not struct["mode_nodes"][network.node_index[nid]]:
                    raise NetworkError(
                        f"trip {tr.id}: {role} node {nid} not on {mode} subgraph"
                    )
        w = _edge_weights(struct, curves, depth_by_link, mode)
        eu, ev, lid, ew = _reduce_parallel(struct, w)
        need_baseline = [t for t in mode_trips
                         if baseline_times is None or t.id not in baseline_times]
        if need_baseline:
            wb = _edge_weights(struct, curves, None, mode)
            bu, bv, blid, bw = _reduce_parallel(struct, wb)
        origin_idx = sorted({network.node_index[t.origin_node] for t in mode_trips})
        origin_row = {o: i for i, o in enumerate(origin_idx)}
        origins = np.asarray(origin_idx, dtype=np.int64)
        dist, pred = _sssp(network.n_nodes, eu, ev, ew, origins)
        if need_baseline:
            borigin_idx = sorted({network.node_index[t.origin_node] for t in need_baseline})
            borigin_row = {o: i for i, o in enumerate(borigin_idx)}
            bdist, _ = _sssp(network.n_nodes, bu, bv, bw,
                             np.asarray(borigin_idx, dtype=np.int64))
        pair_lid = {}
        if include_paths:
            pair_lid = {(int(a), int(b)): int(l) for a, b, l in zip(eu, ev, lid)}
        tight_counts: dict[int, np.ndarray] = {}

        for tr in mode_trips:
            o = network.node_index[tr.origin_node]
            dnode = network.node_index[tr.dest_node]
            row = origin_row[o]
            if baseline_times is not None and tr.id in baseline_times:
                bt = baseline_times[tr.id]
            else:
                bt = float(bdist[borigin_row[o], dnode])
            if not math.isfinite(bt):
                raise NetworkError(
                    f"trip {tr.id}: no baseline path between nodes "
                    f"{tr.origin_node} and {tr.dest_node}"
                )
            t = float(dist[row, dnode])
            if not math.isfinite(t):
                results[tr.id] = RouteResult(tr.id, "cancelled", baseline_time_s=bt)
                continue
            path = None
            if include_paths:
                node_path = _walk_predecessors(pred[row], o, dnode)
                if row not in tight_counts:
                    dd = dist[row]
                    finite = np.isfinite(ew) & np.isfinite(dd[eu])
                    tight = finite & (dd[eu] + ew == dd[ev])
                    tight_counts[row] = np.bincount(
                        ev[tight], minlength=network.n_nodes
                    )
                ambiguous = any(tight_counts[row][n] >= 2 for n in node_path[1:])
                if ambiguous:
                    path = _lexicographic_path(
                        network.n_nodes, eu, ev, lid, ew, dist[row], o, dnode
                    )
                else:
                    path = tuple(
                        pair_lid[(a, b)] for a, b in zip(node_path, node_path[1:])
                    )
            results[tr.id] = RouteResult(
                tr.id, "completed", baseline_time_s=bt,
                travel_time_s=t, path_link_ids=path,
            )
    return [results[t.id] for t in trips]


def _walk_predecessors(pred_row: np.ndarray, origin: int, dest: int) -> list[int]:
    path = [dest]
    node = dest
    while node != origin:
        node = int(pred_row[node])
        if node < 0:
            raise AssertionError("predecessor walk escaped the tree")
        path.append(node)
    path.reverse()
    return path


def _lexicographic_path(n_nodes, eu, ev, lid, ew, d, origin, dest) -> tuple:
    """DP over nodes in distance order: smallest link-id sequence among all
    exact shortest paths (tight edges satisfy d[u] + w == d[v])."""
    finite = np.isfinite(ew)
    tight_idx = np.flatnonzero(finite & (d[eu] + ew == d[ev]))
    out_edges: dict[int, list] = {}
    for i in tight_idx:
        out_edges.setdefault(int(eu[i]), []).append(i)
    best: dict[int, tuple] = {int(origin): ()}
    for node in np.argsort(d, kind="stable"):
        node = int(node)
        if not np.isfinite(d[node]) or node not in best:
            continue
        seq = best[node]
        for i in out_edges.get(node, ()):
            t = int(ev[i])
            cand = seq + (int(lid[i]),)
            if t not in best or cand < best[t]:
                best[t] = cand
    if dest not in best:
        raise AssertionError("destination unreachable in tight-edge DP")
    return best[dest]


def route_trip(
    network: MultimodalNetwork,
    flood: Optional[FloodField],
    curves: DepthDisruptionCurve,
    trip: Trip,
) -> RouteResult:
    """Shortest-travel-time route for one trip (see route_all)."""
    return route_all(network, flood, curves, [trip])[0]


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def load_network(nodes_file: str | Path, links_file: str | Path) -> MultimodalNetwork:
    """Load nodes.csv (id,x,y) and links.csv (see README for columns)."""
    nodes = []
    with open(nodes_file, newline="") as f:
        for rec in csv.DictReader(f):
            nodes.append(NetworkNode(int(rec["id"]), float(rec["x"]), float(rec["y"])))
    links = []
    with open(links_file, newline="") as f:
        for rec in csv.DictReader(f):
            modes = frozenset(m for m in rec["modes"].split("|") if m)
            speeds = {}
            for mode in modes:
                key = f"speed_{mode}"
                if rec.get(key, "") == "":
                    raise NetworkError(f"link {rec['id']}: missing {key}")
                speeds[mode] = float(rec[key])
            geometry = tuple(
                tuple(float(c) for c in pt.split())
                for pt in rec["geometry"].split(";") if pt.strip()
            )
            links.append(Link(
                id=int(rec["id"]),
                from_node=int(rec["from"]),
                to_node=int(rec["to"]),
                length_m=float(rec["length_m"]),
                modes=modes,
                free_speed_kmh=speeds,
                lanes=int(rec["lanes"]),
                road_class=rec["road_class"],
                has_lighting=rec["lighting"].strip().lower() in ("1", "true", "yes"),
                has_signals=rec["signals"].strip().lower() in ("1", "true", "yes"),
                geometry=geometry,
                zone_id=int(rec["zone_id"]) if rec.get("zone_id", "") != "" else None,
            ))
    return MultimodalNetwork(nodes, links)


def load_zones(path: str | Path) -> list[Zone]:
    """Load zones from a GeoJSON FeatureCollection of polygons."""
    with open(path) as f:
        doc = json.load(f)
    zones = []
    for feat in doc["features"]:
        props = feat["properties"]
        ring = tuple(tuple(pt) for pt in feat["geometry"]["coordinates"][0])
        poly = Polygon(ring)
        if not poly.is_valid:
            raise NetworkError(f"zone {props['id']}: self-intersecting polygon")
        zones.append(Zone(
            id=int(props["id"]), name=str(props.get("name", props["id"])),
            population=int(props.get("population", 0)),
            polygon=ring, shape=poly,
        ))
    if len({z.id for z in zones}) != len(zones):
        raise NetworkError("duplicate zone ids")
    if not zones:
        raise NetworkError("at least one zone is required")
    return zones


# ---------------------------------------------------------------------------
# OD demand
# ---------------------------------------------------------------------------

_DEMAND_TAG = 0x0DDE3A4D


def generate_od_demand(
    zones: Sequence[Zone],
    network: MultimodalNetwork,
    trips_per_year: int,
    mode_shares: dict,
    seed: int,
    od_weights: Optional[np.ndarray] = None,
) -> list[Trip]:
    """Random OD trips across zones; deterministic per seed.

    Zone pairs are drawn from `od_weights` (uniform over pairs when None);
    endpoints are drawn uniformly among nodes of the mode's largest connected
    component falling inside the zone polygon.
    """
    shares = [mode_shares.get(m, 0.0) for m in MODES]
    if abs(sum(shares) - 1.0) > 1e-9:
        raise NetworkError(f"mode shares must sum to 1, got {sum(shares)}")
    zones = sorted(zones, key=lambda z: z.id)
    nz = len(zones)
    if od_weights is None:
        od_weights = np.ones((nz, nz))
    od_weights = np.asarray(od_weights, dtype=float)
    if od_weights.shape != (nz, nz):
        raise NetworkError(f"OD weight matrix must be {nz}x{nz}")
    if od_weights.sum() <= 0 or (od_weights < 0).any():
        raise NetworkError("OD weights must be non-negative with positive sum")
    probs = (od_weights / od_weights.sum()).ravel()

    candidates: dict[tuple, list] = {}
    for mode in MODES:
        if mode_shares.get(mode, 0.0) <= 0:
            continue
        comp = network.mode_component_nodes(mode)
        for z in zones:
            inside = [nid for nid in comp
                      if z.contains(network.nodes[nid].x, network.nodes[nid].y)]
            candidates[(z.id, mode)] = inside

    rng = np.random.default_rng(np.random.SeedSequence([_DEMAND_TAG, seed]))
    trips = []
    for i in range(trips_per_year):
        mode = MODES[int(rng.choice(len(MODES), p=shares))]
        pair = int(rng.choice(nz * nz, p=probs))
        oz, dz = zones[pair // nz], zones[pair % nz]
        o_nodes = candidates[(oz.id, mode)]
        d_nodes = candidates[(dz.id, mode)]
        if not o_nodes or not d_nodes:
            empty = oz.id if not o_nodes else dz.id
            raise NetworkError(f"zone {empty} has no reachable {mode} node")
        for _ in range(100):
            onode = o_nodes[int(rng.integers(len(o_nodes)))]
            dnode = d_nodes[int(rng.integers(len(d_nodes)))]
            if onode != dnode:
                break
        else:
            raise NetworkError(
                f"cannot draw distinct endpoints for zones {oz.id}->{dz.id} ({mode})"
            )
        trips.append(Trip(i, onode, dnode, mode, oz.id, dz.id))
    return trips
