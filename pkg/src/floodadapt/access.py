"""Hex-grid cumulative accessibility and the quality-of-life index.

Each hex counts the POIs reachable from its center within per-mode travel
time thresholds under flood-disrupted speeds. Per-category counts (own +
downweighted neighbor counts, per capita) are normalized at a fixed 75th
percentile, clipped at 1, and combined with category weights into an index
in [0, 1], then population-aggregated to zones.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .network import (MODES, DepthDisruptionCurve, MultimodalNetwork,
                      NetworkError, _edge_weights, _reduce_parallel,
                      all_link_depths)

SQRT3 = math.sqrt(3.0)

# axial 6-adjacency
HEX_NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


class AccessError(ValueError):
    """Invalid accessibility input."""


@dataclass
class HexCell:
    q: int
    r: int
    center: tuple
    population: float = 0.0
    zone_id: Optional[int] = None


@dataclass
class HexGrid:
    """Pointy-top axial hex tiling anchored at the extent's lower-left."""

    resolution_m: float  # hex edge length
    origin: tuple
    cells: dict = field(default_factory=dict)  # (q, r) -> HexCell

    def axial_of_point(self, x: float, y: float) -> tuple:
        size = self.resolution_m
        px, py = x - self.origin[0], y - self.origin[1]
        qf = (SQRT3 / 3.0 * px - py / 3.0) / size
        rf = (2.0 / 3.0 * py) / size
        return _axial_round(qf, rf)

    def center_of(self, q: int, r: int) -> tuple:
        size = self.resolution_m
        return (self.origin[0] + size * SQRT3 * (q + r / 2.0),
                self.origin[1] + size * 1.5 * r)

    def neighbors(self, q: int, r: int) -> list:
        return [(q + dq, r + dr) for dq, dr in HEX_NEIGHBOR_OFFSETS
                if (q + dq, r + dr) in self.cells]


def _axial_round(qf: float, rf: float) -> tuple:
    # cube rounding
    xf, zf = qf, rf
    yf = -xf - zf
    x, y, z = round(xf), round(yf), round(zf)
    dx, dy, dz = abs(x - xf), abs(y - yf), abs(z - zf)
    if dx > dy and dx > dz:
        x = -y - z
    elif dy > dz:
        y = -x - z
    else:
        z = -x - y
    return int(x), int(z)


@dataclass(frozen=True)
class POI:
    id: int
    category: str
    x: float
    y: float


@dataclass(frozen=True)
class QoLParams:
    neighbor_weight: float
    p75_norm: dict          # category -> positive normalizer
    category_weights: dict  # category -> weight, sums to 1
    thresholds_s: dict      # mode -> closed travel-time threshold (s)

    def validate(self) -> None:
        if not 0.0 <= self.neighbor_weight <= 1.0:
            raise AccessError("neighbor_weight must be in [0, 1]")
        if abs(sum(self.category_weights.values()) - 1.0) > 1e-9:
            raise AccessError("category weights must sum to 1")
        if any(w < 0 for w in self.category_weights.values()):
            raise AccessError("category weights must be non-negative")
        for cat, p in self.p75_norm.items():
            if p <= 0:
                raise AccessError(f"p75 normalizer for {cat} must be > 0")
        for mode in MODES:
            if self.thresholds_s.get(mode, 0) <= 0:
                raise AccessError(f"missing/invalid threshold for mode {mode}")

    @property
    def categories(self) -> list:
        return sorted(self.category_weights)


DEFAULT_THRESHOLDS_S = {"walk": 600.0, "cycle": 900.0, "drive": 1800.0}


def build_hex_grid(
    extent: tuple,
    resolution_m: float,
    population: Optional[Mapping[tuple, float]] = None,
    population_raster=None,
    zones: Optional[Sequence] = None,
) -> HexGrid:
    """Tile an (xmin, ymin, xmax, ymax) extent with hexes of the given edge
    length. Population comes from a per-hex {(q, r): pop} table or from a
    raster (each raster cell assigned to the hex containing its center)."""
    xmin, ymin, xmax, ymax = extent
    if not (xmax > xmin and ymax > ymin) or resolution_m <= 0:
        raise AccessError("extent must be non-degenerate and resolution > 0")
    grid = HexGrid(resolution_m=resolution_m, origin=(xmin, ymin))
    pad = 2.0 * resolution_m
    r_lo = math.floor((ymin - ymin - pad) / (1.5 * resolution_m)) - 1
    r_hi = math.ceil((ymax - ymin + pad) / (1.5 * resolution_m)) + 1
    for r in range(r_lo, r_hi + 1):
        q_lo = math.floor(((xmin - xmin - pad) / (SQRT3 * resolution_m)) - r / 2.0) - 1
        q_hi = math.ceil(((xmax - xmin + pad) / (SQRT3 * resolution_m)) - r / 2.0) + 1
        for q in range(q_lo, q_hi + 1):
            cx, cy = grid.center_of(q, r)
            if xmin - pad <= cx <= xmax + pad and ymin - pad <= cy <= ymax + pad:
                grid.cells[(q, r)] = HexCell(q, r, (cx, cy))
    if population is not None:
        for (q, r), pop in population.items():
            if pop < 0:
                raise AccessError(f"hex ({q}, {r}): negative population")
            if (q, r) in grid.cells:
                grid.cells[(q, r)].population = float(pop)
    elif population_raster is not None:
        values, xs, ys = population_raster
        for val, x, y in zip(np.ravel(values), np.ravel(xs), np.ravel(ys)):
            key = grid.axial_of_point(float(x), float(y))
            if key in grid.cells and np.isfinite(val):
                grid.cells[key].population += float(val)
    if zones is not None:
        for cell in grid.cells.values():
            for z in zones:
                if z.contains(*cell.center):
                    cell.zone_id = z.id
                    break
    return grid


def load_pois(path: str | Path, categories: Optional[set] = None) -> list:
    """pois.csv: id,category,x,y."""
    pois = []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            cat = rec["category"].strip()
            if categories is not None and cat not in categories:
                raise AccessError(f"POI {rec['id']}: unknown category {cat}")
            pois.append(POI(int(rec["id"]), cat, float(rec["x"]), float(rec["y"])))
    return pois


def load_hex_population(path: str | Path) -> dict:
    """Hex population table: q,r,population."""
    table = {}
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            table[(int(rec["q"]), int(rec["r"]))] = float(rec["population"])
    return table


class AccessibilityEngine:
    """Precomputed snapping + batched shortest-time searches over the grid.

    Hex centers snap to the nearest node of each mode's largest connected
    component within `snap_radius_m` (no snap => zero counts for that mode);
    POIs attach to their nearest component node per mode.
    """

    def __init__(
        self,
        grid: HexGrid,
        network: MultimodalNetwork,
        pois: Sequence[POI],
        params: QoLParams,
        snap_radius_m: float = 300.0,
    ):
        params.validate()
        self.grid = grid
        self.network = network
        self.pois = list(pois)
        self.params = params
        self.snap_radius_m = snap_radius_m
        self.hex_keys = sorted(grid.cells)
        self.categories = params.categories

        self._mode_data = {}
        for mode in MODES:
            comp = network.mode_component_nodes(mode)
            if not comp:
                self._mode_data[mode] = None
                continue
            idx = np.asarray([network.node_index[n] for n in comp])
            coords = np.asarray([[network.nodes[n].x, network.nodes[n].y]
                                 for n in comp])
            tree = cKDTree(coords)
            centers = np.asarray([grid.cells[k].center for k in self.hex_keys])
            dist, pos = tree.query(centers)
            hex_node = np.where(dist <= snap_radius_m, idx[pos], -1)
            poi_node = np.full(len(self.pois), -1, dtype=np.int64)
            if self.pois:
                pdist, ppos = tree.query(
                    np.asarray([[p.x, p.y] for p in self.pois]))
                poi_node = idx[ppos]
            self._mode_data[mode] = {"hex_node": hex_node, "poi_node": poi_node}

        self._cat_of_poi = [p.category for p in self.pois]
        self._poi_onehot = np.zeros((len(self.pois), len(self.categories)),
                                    dtype=np.int64)
        for pi, p in enumerate(self.pois):
            self._poi_onehot[pi, self.categories.index(p.category)] = 1
        # sparse 6-neighbor adjacency over hex positions
        pos = {k: i for i, k in enumerate(self.hex_keys)}
        rows, cols = [], []
        for k in self.hex_keys:
            for nk in grid.neighbors(*k):
                rows.append(pos[k])
                cols.append(pos[nk])
        n_hex = len(self.hex_keys)
        self._neighbor_matrix = csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(n_hex, n_hex))
        self.populations = np.asarray(
            [grid.cells[k].population for k in self.hex_keys])

    def counts_per_mode(self, flood, curves: DepthDisruptionCurve) -> dict:
        """mode -> (n_hex, n_categories) reachable-POI count matrix."""
        depth_by_link = all_link_depths(self.network, flood) if flood is not None else None
        n_cat = len(self.categories)
        out = {}
        for mode in MODES:
            md = self._mode_data[mode]
            threshold = self.params.thresholds_s[mode]
            per_hex = np.zeros((len(self.hex_keys), n_cat), dtype=np.int64)
            if md is not None:
                struct = self.network._mode_struct(mode)
                w = _edge_weights(struct, curves, depth_by_link, mode)
                eu, ev, lid, ew = _reduce_parallel(struct, w)
                finite = np.isfinite(ew)
                graph = csr_matrix(
                    (ew[finite], (eu[finite], ev[finite])),
                    shape=(self.network.n_nodes, self.network.n_nodes))
                sources = sorted(set(md["hex_node"].tolist()) - {-1})
                if sources and self.pois:
                    dist = np.atleast_2d(dijkstra(
                        graph, directed=True,
                        indices=np.asarray(sources), limit=threshold))
                    src_row = {s: i for i, s in enumerate(sources)}
                    rows = np.asarray(
                        [src_row.get(int(n), -1) for n in md["hex_node"]])
                    snapped = rows >= 0
                    # closed threshold ("within")
                    reach = dist[np.ix_(rows[snapped], md["poi_node"])] <= threshold
                    per_hex[snapped] = reach @ self._poi_onehot
            out[mode] = per_hex
        return out

    def poi_counts(self, flood, curves: DepthDisruptionCurve) -> dict:
        """Per hex: {(category, mode): count} under the given flood."""
        per_mode = self.counts_per_mode(flood, curves)
        counts = {k: {} for k in self.hex_keys}
        for mode in MODES:
            m = per_mode[mode]
            for hi, k in enumerate(self.hex_keys):
                for ci, cat in enumerate(self.categories):
                    counts[k][(cat, mode)] = int(m[hi, ci])
        return counts

    def qol_array(self, flood, curves: DepthDisruptionCurve) -> np.ndarray:
        """QoL index per hex (ordered as hex_keys), fully vectorized."""
        per_mode = self.counts_per_mode(flood, curves)
        combined = np.maximum.reduce([per_mode[m] for m in MODES]).astype(float)
        total = combined + self.params.neighbor_weight * \
            (self._neighbor_matrix @ combined)
        divisor = np.maximum(self.populations, 1.0)[:, None]
        p75 = np.asarray([self.params.p75_norm[c] for c in self.categories])
        norm = np.minimum(total / divisor / p75[None, :], 1.0)
        wvec = np.asarray([self.params.category_weights[c]
                           for c in self.categories])
        return np.clip(norm @ wvec, 0.0, 1.0)


def combine_modes(counts: Mapping, categories: Sequence[str]) -> dict:
    """Per-category count = max over modes (reachable by any mode counts once)."""
    return {cat: max(counts.get((cat, m), 0) for m in MODES) for cat in categories}


def qol_index(
    own_counts: Mapping[str, float],
    neighbor_counts: Sequence[Mapping[str, float]],
    population: float,
    params: QoLParams,
) -> float:
    """Weighted, per-capita, p75-normalized, clipped accessibility index."""
    divisor = max(population, 1.0)
    index = 0.0
    for cat, weight in params.category_weights.items():
        total = own_counts.get(cat, 0.0)
        for nc in neighbor_counts:
            total += params.neighbor_weight * nc.get(cat, 0.0)
        raw = total / divisor
        index += weight * min(raw / params.p75_norm[cat], 1.0)
    # weights may sum to 1 +/- 1 ulp; the index contract is a hard [0, 1]
    return min(max(index, 0.0), 1.0)


def qol_by_hex(engine: AccessibilityEngine, flood, curves) -> dict:
    """Index per hex key for one flood state."""
    values = engine.qol_array(flood, curves)
    return dict(zip(engine.hex_keys, values.tolist()))


def aggregate_qol_by_zone(
    hex_indices: Mapping[tuple, float],
    grid: HexGrid,
    zone_ids: Sequence[int],
) -> dict:
    """Population-weighted mean of member-hex indices per zone.

    Unpopulated hexes are excluded; a zone without populated hexes gets 0.
    """
    totals = {z: 0.0 for z in zone_ids}
    pops = {z: 0.0 for z in zone_ids}
    for key, idx in hex_indices.items():
        cell = grid.cells[key]
        if cell.population <= 0:
            continue
        if cell.zone_id is None:
            raise AccessError(f"populated hex {key} has no zone")
        totals[cell.zone_id] += idx * cell.population
        pops[cell.zone_id] += cell.population
    return {z: (totals[z] / pops[z] if pops[z] > 0 else 0.0) for z in zone_ids}


def accessible_poi_counts(
    hex_key: tuple,
    grid: HexGrid,
    network: MultimodalNetwork,
    flood,
    curves: DepthDisruptionCurve,
    pois: Sequence[POI],
    params: QoLParams,
    snap_radius_m: float = 300.0,
) -> dict:
    """Counts per (category, mode) for a single hex (convenience wrapper)."""
    engine = AccessibilityEngine(grid, network, pois, params, snap_radius_m)
    return engine.poi_counts(flood, curves)[hex_key]


def compute_p75_normalizers(engine: AccessibilityEngine, curves) -> dict:
    """75th percentile of per-capita (own + downweighted neighbor) counts per
    category over populated hexes at the no-flood baseline. Categories whose
    p75 is zero fall back to 1 so the normalizer stays positive."""
    counts = engine.poi_counts(None, curves)
    combined = {k: combine_modes(counts[k], engine.categories)
                for k in engine.hex_keys}
    raws = {cat: [] for cat in engine.categories}
    for k in engine.hex_keys:
        cell = engine.grid.cells[k]
        if cell.population <= 0:
            continue
        neigh = [combined[n] for n in engine.grid.neighbors(*k)]
        for cat in engine.categories:
            total = combined[k][cat] + engine.params.neighbor_weight * sum(
                nc[cat] for nc in neigh)
            raws[cat].append(total / max(cell.population, 1.0))
    out = {}
    for cat in engine.categories:
        p75 = float(np.percentile(raws[cat], 75)) if raws[cat] else 0.0
        out[cat] = p75 if p75 > 0 else 1.0
    return out
