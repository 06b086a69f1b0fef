"""Generator for the bundled desk-scale reference scenario ("basin-3zone").

3 zones over a 32x32 terrain (50 m cells) with one conical ponding basin per
zone, a 14x14 all-modes grid network (~200 nodes), 500 trips/year, and the
8-action adaptation catalog. Deterministic: the same inputs always produce
byte-identical scenario files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import yaml

GRID_N = 32
CELL_M = 50.0
EXTENT_M = GRID_N * CELL_M  # 1600 m

BASINS = (  # (cx, cy, radius_m, depth_m), one per zone strip
    (280.0, 800.0, 210.0, 1.6),
    (800.0, 650.0, 230.0, 1.8),
    (1320.0, 900.0, 210.0, 1.5),
)

ZONE_EDGES = (0.0, 533.0, 1066.0, 1600.0)
ZONE_POPS = (3000, 4200, 2800)

POI_CATEGORIES = ("grocery", "health", "leisure")


def _elevation() -> np.ndarray:
    """Dome draining to every boundary, with three carved conical basins."""
    # cell centers, north row first
    xs = (np.arange(GRID_N) + 0.5) * CELL_M
    ys_north_first = EXTENT_M - (np.arange(GRID_N) + 0.5) * CELL_M
    X, Y = np.meshgrid(xs, ys_north_first)
    border = np.minimum(np.minimum(X, EXTENT_M - X), np.minimum(Y, EXTENT_M - Y))
    elev = 10.0 + 0.004 * border
    for cx, cy, radius, depth in BASINS:
        dist = np.hypot(X - cx, Y - cy)
        carve = np.clip(depth * (1.0 - dist / radius), 0.0, None)
        elev = elev - carve
    return elev


def _zone_of_x(x: float) -> int:
    for zid in (1, 2, 3):
        if x <= ZONE_EDGES[zid] or zid == 3:
            return zid
    return 3


def _write_asc(path: Path, grid: np.ndarray) -> None:
    lines = [
        f"ncols {grid.shape[1]}", f"nrows {grid.shape[0]}",
        "xllcorner 0.0", "yllcorner 0.0", f"cellsize {CELL_M}",
        "NODATA_value -9999",
    ]
    for row in grid:
        lines.append(" ".join(format(v, ".6f") for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_reference_scenario(dest: str | Path, trips_per_year: int = 500) -> Path:
    """Write all scenario files into `dest`; returns the scenario.yaml path."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)

    elev = _elevation()
    _write_asc(dest / "terrain.asc", elev)

    xs = (np.arange(GRID_N) + 0.5) * CELL_M
    zone_row = [float(_zone_of_x(x)) for x in xs]
    zones_grid = np.tile(zone_row, (GRID_N, 1))
    _write_asc(dest / "zones.asc", zones_grid)

    # 14x14 grid network, 110 m spacing
    n_side = 14
    spacing = 110.0
    off = 85.0
    coords = {}
    with open(dest / "nodes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "x", "y"])
        for j in range(n_side):
            for i in range(n_side):
                nid = j * n_side + i
                x, y = off + i * spacing, off + j * spacing
                coords[nid] = (x, y)
                w.writerow([nid, x, y])

    rng = np.random.default_rng(20230)
    with open(dest / "links.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "from", "to", "length_m", "modes", "speed_drive",
                    "speed_cycle", "speed_walk", "lanes", "road_class",
                    "lighting", "signals", "zone_id", "geometry"])
        lid = 0
        for j in range(n_side):
            for i in range(n_side):
                a = j * n_side + i
                for b in ((j, i + 1), (j + 1, i)):
                    if b[0] >= n_side or b[1] >= n_side:
                        continue
                    bid = b[0] * n_side + b[1]
                    ax, ay = coords[a]
                    bx, by = coords[bid]
                    mx, my = (ax + bx) / 2.0, (ay + by) / 2.0
                    arterial = (j == 7 and b[0] == 7) or (i == 7 and b[1] == 7)
                    w.writerow([
                        lid, a, bid, spacing, "drive|cycle|walk",
                        60.0 if arterial else 50.0, 20.0, 5.0,
                        2 if arterial else 1,
                        "arterial" if arterial else "local",
                        int(bool(rng.integers(0, 2))),
                        int(rng.random() < 0.1),
                        _zone_of_x(mx),
                        f"{ax} {ay};{mx} {my};{bx} {by}",
                    ])
                    lid += 1

    features = []
    for zid in (1, 2, 3):
        x0, x1 = ZONE_EDGES[zid - 1], ZONE_EDGES[zid]
        ring = [[x0, 0.0], [x1, 0.0], [x1, EXTENT_M], [x0, EXTENT_M], [x0, 0.0]]
        features.append({
            "type": "Feature",
            "properties": {"id": zid, "name": f"zone-{zid}",
                           "population": ZONE_POPS[zid - 1]},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    (dest / "zones.geojson").write_text(json.dumps(
        {"type": "FeatureCollection", "features": features}, indent=2))

    poi_rng = np.random.default_rng(40231)
    with open(dest / "pois.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "category", "x", "y"])
        pid = 0
        for cat in POI_CATEGORIES:
            for _ in range(10):
                x = float(poi_rng.uniform(120.0, EXTENT_M - 120.0))
                y = float(poi_rng.uniform(120.0, EXTENT_M - 120.0))
                w.writerow([pid, cat, round(x, 1), round(y, 1)])
                pid += 1

    # hex populations over the extent (axial grid anchored at the origin)
    from .access import build_hex_grid

    grid = build_hex_grid((0.0, 0.0, EXTENT_M, EXTENT_M), 100.0)
    hex_rng = np.random.default_rng(50232)
    with open(dest / "hexpop.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["q", "r", "population"])
        for (q, r), cell in sorted(grid.cells.items()):
            cx, cy = cell.center
            inside = 0.0 <= cx <= EXTENT_M and 0.0 <= cy <= EXTENT_M
            pop = int(hex_rng.integers(0, 160)) if inside else 0
            w.writerow([q, r, pop])

    doc = {
        "name": "basin-3zone",
        "horizon": {"start_year": 2023, "end_year": 2100},
        "rainfall": {"periods": [{
            "start_year": 2023, "end_year": 2100,
            "distribution": {"type": "gumbel", "location_mm": 35.0,
                             "scale_mm": 14.0},
        }]},
        "terrain": {"elevation": "terrain.asc", "zones_raster": "zones.asc"},
        "network": {"nodes": "nodes.csv", "links": "links.csv"},
        "zones": "zones.geojson",
        "pois": "pois.csv",
        "hex": {"resolution_m": 100.0, "population": "hexpop.csv",
                "snap_radius_m": 300.0},
        "disruption_curves": {
            "drive": {"coefficients": [86.9448, -0.5529, 0.0009],
                      "cutoff_mm": 300.0},
            "cycle": {"coefficients": [20.0, -0.1], "cutoff_mm": 200.0},
            "walk": {"coefficients": [5.0, -0.0125], "cutoff_mm": 400.0},
        },
        "cost_model": {
            "construction": {
                "base_cost_per_m": {"motorway": 3000.0, "arterial": 1000.0,
                                    "local": 500.0, "path": 200.0},
                "per_lane_factor": 0.8,
                "lighting_per_m": 20.0,
                "signals_per_link": 50000.0,
            },
            "damage_curves": {
                "motorway": [[0.0, 0.0], [500.0, 0.45], [1000.0, 1.0]],
                "arterial": [[0.0, 0.0], [500.0, 0.4], [1000.0, 1.0]],
                "local": [[0.0, 0.0], [500.0, 0.4], [1000.0, 1.0]],
                "path": [[0.0, 0.0], [500.0, 0.3], [1000.0, 0.9]],
            },
            "vot_per_hour": {"drive": 120.0, "cycle": 90.0, "walk": 80.0},
            "cancellation_factor": 0.8,
        },
        "qol": {
            "neighbor_weight": 0.5,
            "thresholds_s": {"walk": 600.0, "cycle": 900.0, "drive": 1800.0},
            "category_weights": {"grocery": 0.4, "health": 0.35,
                                 "leisure": 0.25},
            "p75_norm": "auto",
        },
        "actions": [
            {"id": 0, "name": "retrofit-roadside-swales",
             "drainage_boost_mm": 80.0, "capex": 0.0,
             "annual_maintenance": 0.0, "lifetime_years": None},
            {"id": 1, "name": "retention-pond-small",
             "storage_boost_m3": 2000.0, "capex": 500000.0,
             "annual_maintenance": 10000.0, "lifetime_years": None},
            {"id": 2, "name": "drainage-upgrade-minor",
             "drainage_boost_mm": 20.0, "capex": 200000.0,
             "annual_maintenance": 5000.0, "lifetime_years": None},
            {"id": 3, "name": "retention-basin-large",
             "storage_boost_m3": 5000.0, "capex": 1200000.0,
             "annual_maintenance": 20000.0, "lifetime_years": None},
            {"id": 4, "name": "drainage-upgrade-major",
             "drainage_boost_mm": 40.0, "capex": 400000.0,
             "annual_maintenance": 8000.0, "lifetime_years": None},
            {"id": 5, "name": "temporary-storage-tanks",
             "storage_boost_m3": 1000.0, "capex": 100000.0,
             "annual_maintenance": 2000.0, "lifetime_years": 20},
            {"id": 6, "name": "gully-cleaning-program",
             "drainage_boost_mm": 10.0, "capex": 50000.0,
             "annual_maintenance": 1000.0, "lifetime_years": 15},
            {"id": 7, "name": "combined-drainage-storage",
             "drainage_boost_mm": 60.0, "storage_boost_m3": 1000.0,
             "capex": 900000.0, "annual_maintenance": 15000.0,
             "lifetime_years": None},
        ],
        "reward_weights": {"beta_I": -1.0, "beta_D": -1.0, "beta_C": -1.0,
                           "beta_Q": 1.0, "beta_A": -1.0, "beta_M": -1.0},
        "demand": {"trips_per_year": trips_per_year,
                   "mode_shares": {"drive": 0.4, "cycle": 0.35, "walk": 0.25},
                   "od_weights": None},
        "seeds": {"demand": 11, "default_run": 7},
        "rl": {"state_mask_bits": 12},
    }
    out = dest / "scenario.yaml"
    out.write_text(yaml.safe_dump(doc, sort_keys=False))
    return out
