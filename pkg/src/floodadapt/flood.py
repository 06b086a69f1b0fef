"""Static fill-spill pluvial flood surrogate.

Rainfall on each cell is reduced by the zone's drainage capacity, zone
storage absorbs part of the remaining volume, and what is left ponds in the
depressions of the terrain (located with a Priority-Flood fill). Water in a
depression forms a flat surface; each depression only receives the rain that
fell on its own cells, water on drainage paths leaves the domain.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from scipy import ndimage

_NEIGHBOR_STRUCTURE = np.ones((3, 3), dtype=bool)  # 8-connectivity


class TerrainError(ValueError):
    """Invalid terrain grid or flood computation input."""


@dataclass
class TerrainGrid:
    """Row-major elevation raster, north row first, with optional zone ids.

    `elevation` is (n_rows, n_cols) in metres; nodata cells are NaN and act
    as impermeable walls. `zone_of_cell` holds integer zone ids, -1 for none.
    """

    n_rows: int
    n_cols: int
    cell_size_m: float
    origin: tuple[float, float]  # (x, y) of the lower-left corner
    elevation: np.ndarray
    zone_of_cell: Optional[np.ndarray] = None
    _filled: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _labels: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.elevation = np.asarray(self.elevation, dtype=float)
        if self.elevation.shape != (self.n_rows, self.n_cols):
            raise TerrainError(
                f"elevation shape {self.elevation.shape} != "
                f"({self.n_rows}, {self.n_cols})"
            )
        if self.cell_size_m <= 0:
            raise TerrainError(f"cell_size_m must be > 0, got {self.cell_size_m}")
        finite = np.isfinite(self.elevation) | np.isnan(self.elevation)
        if not finite.all():
            raise TerrainError("non-nodata cells must have finite elevation")
        if self.zone_of_cell is not None:
            self.zone_of_cell = np.asarray(self.zone_of_cell, dtype=int)
            if self.zone_of_cell.shape != self.elevation.shape:
                raise TerrainError("zone raster shape mismatch with elevation")

    @property
    def nodata_mask(self) -> np.ndarray:
        return np.isnan(self.elevation)

    @property
    def cell_area_m2(self) -> float:
        return self.cell_size_m * self.cell_size_m

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """Array (row, col) of the cell containing a point; floor tie rule."""
        x0, y0 = self.origin
        col = int(np.floor((x - x0) / self.cell_size_m))
        row_from_bottom = int(np.floor((y - y0) / self.cell_size_m))
        row = self.n_rows - 1 - row_from_bottom
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise TerrainError(f"point ({x}, {y}) outside grid extent")
        return row, col

    def filled_surface(self) -> np.ndarray:
        if self._filled is None:
            self._filled = fill_depressions(self)
        return self._filled

    def depression_labels(self) -> np.ndarray:
        """Connected components (8-adjacency) of cells below their spill level."""
        if self._labels is None:
            ponded = self.filled_surface() > self.elevation
            ponded &= ~self.nodata_mask
            self._labels, _ = ndimage.label(ponded, structure=_NEIGHBOR_STRUCTURE)
        return self._labels


@dataclass
class FloodField:
    """Per-cell standing water depths for one rainfall event.

    Carries the grid geometry so depths can be queried by map coordinate, and
    a volume account (all m^3): rain over non-nodata cells, removed by zone
    drainage, absorbed by zone storage, stored in depressions, exited.
    """

    depth_mm: np.ndarray
    event_year: int
    n_rows: int
    n_cols: int
    cell_size_m: float
    origin: tuple[float, float]
    rain_volume_m3: float
    drained_volume_m3: float
    absorbed_volume_m3: float
    total_water_volume_m3: float  # stored in depressions
    exited_volume_m3: float

    def depth_at_index(self, row: int, col: int) -> float:
        return float(self.depth_mm[row, col])


@dataclass(frozen=True)
class ZoneProtection:
    """Effective adaptation capacities for one zone."""

    drainage_capacity_mm: float = 0.0
    storage_capacity_m3: float = 0.0

    def validate(self) -> None:
        if self.drainage_capacity_mm < 0 or self.storage_capacity_m3 < 0:
            raise TerrainError("zone capacities must be non-negative")


def fill_depressions(terrain: TerrainGrid) -> np.ndarray:
    """Priority-Flood depression filling.

    Returns a surface >= elevation on which every cell has a non-ascending
    8-neighbor path to the grid boundary. Nodata cells are walls; non-nodata
    regions fully enclosed by walls get an infinite fill level.
    """
    elev = terrain.elevation
    n_rows, n_cols = elev.shape
    nodata = terrain.nodata_mask
    if nodata.all():
        raise TerrainError("all-nodata grid cannot be filled")

    # flat Python lists keep the heap loop free of numpy scalar overhead
    elev_flat = elev.ravel().tolist()
    nodata_flat = nodata.ravel().tolist()
    filled_flat = [float("inf")] * (n_rows * n_cols)
    visited = nodata_flat[:]
    for i, is_nodata in enumerate(nodata_flat):
        if is_nodata:
            filled_flat[i] = float("nan")

    heap: list[tuple[float, int]] = []
    push = heapq.heappush
    for r in range(n_rows):
        for c in range(n_cols):
            if (r in (0, n_rows - 1) or c in (0, n_cols - 1)):
                i = r * n_cols + c
                if not nodata_flat[i]:
                    filled_flat[i] = elev_flat[i]
                    visited[i] = True
                    push(heap, (elev_flat[i], i))

    pop = heapq.heappop
    while heap:
        level, i = pop(heap)
        r, c = divmod(i, n_cols)
        for dr in (-1, 0, 1):
            nr = r + dr
            if not 0 <= nr < n_rows:
                continue
            base = nr * n_cols
            for dc in (-1, 0, 1):
                nc = c + dc
                if 0 <= nc < n_cols:
                    j = base + nc
                    if not visited[j]:
                        visited[j] = True
                        lvl = elev_flat[j]
                        if lvl < level:
                            lvl = level
                        filled_flat[j] = lvl
                        push(heap, (lvl, j))
    return np.asarray(filled_flat, dtype=float).reshape(n_rows, n_cols)


def compute_flood_depths(
    terrain: TerrainGrid,
    event,
    zone_adaptation: Optional[Mapping[int, ZoneProtection]] = None,
) -> FloodField:
    """Water depth per cell for one annual event given zone adaptation.

    Pipeline: drainage trims intensity per zone, storage absorbs volume
    pro-rata over the zone's cells, the remaining volume on each depression's
    cells ponds there (flat surface found by bisecting the water level), and
    volume beyond a depression's capacity, or falling on drainage paths,
    exits the domain.
    """
    zone_adaptation = dict(zone_adaptation or {})
    for zid, prot in zone_adaptation.items():
        prot.validate()

    elev = terrain.elevation
    nodata = terrain.nodata_mask
    wet = ~nodata
    area = terrain.cell_area_m2
    intensity = float(event.intensity_mm)
    if intensity < 0:
        raise TerrainError("event intensity must be non-negative")

    zones = terrain.zone_of_cell
    if zone_adaptation:
        if zones is None:
            raise TerrainError("zone adaptation given but terrain has no zone raster")
        known = set(np.unique(zones[wet]).tolist()) - {-1}
        unknown = set(zone_adaptation) - known
        if unknown:
            raise TerrainError(f"adaptation references unknown zones {sorted(unknown)}")

    # (1) drainage trims intensity uniformly within each zone
    eff_mm = np.where(wet, intensity, 0.0)
    if zones is not None:
        for zid, prot in zone_adaptation.items():
            mask = wet & (zones == zid)
            eff_mm[mask] = max(0.0, intensity - prot.drainage_capacity_mm)

    rain_volume = intensity * 1e-3 * area * int(wet.sum())
    vol = eff_mm * 1e-3 * area  # (2) per-cell effective volume
    drained_volume = rain_volume - float(vol.sum())

    # (3) zone storage absorbs volume pro-rata across the zone's cells
    absorbed_volume = 0.0
    if zones is not None:
        for zid, prot in zone_adaptation.items():
            if prot.storage_capacity_m3 <= 0:
                continue
            mask = wet & (zones == zid)
            zone_vol = float(vol[mask].sum())
            take = min(prot.storage_capacity_m3, zone_vol)
            if zone_vol > 0 and take > 0:
                vol[mask] *= 1.0 - take / zone_vol
                absorbed_volume += take

    # (4) pond the remaining volume depression by depression
    filled = terrain.filled_surface()
    labels = terrain.depression_labels()
    depth_flat = np.zeros(elev.size)
    stored_volume = 0.0
    exited_volume = float(vol[wet & (labels == 0)].sum())

    # group depression cells once instead of scanning the grid per label
    lab_flat = labels.ravel()
    order = np.argsort(lab_flat, kind="stable")
    sorted_labs = lab_flat[order]
    n_labels = int(sorted_labs[-1]) if sorted_labs.size else 0
    bounds = np.searchsorted(sorted_labs, np.arange(1, n_labels + 2))
    elev_flat = elev.ravel()
    vol_flat = vol.ravel()
    filled_flat = filled.ravel()

    for lab in range(1, n_labels + 1):
        idx = order[bounds[lab - 1]:bounds[lab]]
        inflow = float(vol_flat[idx].sum())
        if inflow <= 0:
            continue
        cell_elev = elev_flat[idx]
        spill = float(filled_flat[idx].min())  # flat spill level
        if not np.isinf(spill):
            capacity = float((spill - cell_elev).sum() * area)
            if inflow >= capacity:
                depth_flat[idx] = spill - cell_elev
                stored_volume += capacity
                exited_volume += inflow - capacity
                continue
        # the depression holds the whole inflow: solve the flat water level
        # exactly from the sorted cell elevations
        es = np.sort(cell_elev)
        target = inflow / area
        if es.size == 1:
            level = float(es[0]) + target
        else:
            cum = np.cumsum(es)
            # volume (in level units) when the surface sits at es[j + 1]
            v_at = np.arange(1, es.size) * es[1:] - cum[:-1]
            j = int(np.searchsorted(v_at, target))
            wet_cells = min(j + 1, es.size)
            level = (target + float(cum[wet_cells - 1])) / wet_cells
        d = np.clip(level - cell_elev, 0.0, None)
        depth_flat[idx] = d
        stored_volume += float(d.sum()) * area
    depth_m = depth_flat.reshape(elev.shape)

    return FloodField(
        depth_mm=depth_m * 1000.0,
        event_year=int(event.year),
        n_rows=terrain.n_rows,
        n_cols=terrain.n_cols,
        cell_size_m=terrain.cell_size_m,
        origin=terrain.origin,
        rain_volume_m3=rain_volume,
        drained_volume_m3=drained_volume,
        absorbed_volume_m3=absorbed_volume,
        total_water_volume_m3=stored_volume,
        exited_volume_m3=exited_volume,
    )


def depth_at_point(flood: FloodField, x: float, y: float) -> float:
    """Depth (mm) of the cell containing the point; floor rule on edges."""
    x0, y0 = flood.origin
    col = int(np.floor((x - x0) / flood.cell_size_m))
    row_from_bottom = int(np.floor((y - y0) / flood.cell_size_m))
    row = flood.n_rows - 1 - row_from_bottom
    if not (0 <= row < flood.n_rows and 0 <= col < flood.n_cols):
        raise TerrainError(f"point ({x}, {y}) outside flood field extent")
    return float(flood.depth_mm[row, col])


def read_asc(path: str | Path) -> tuple[np.ndarray, dict]:
    """Parse an ESRI ASCII grid; returns (array with NaN nodata, header dict)."""
    path = Path(path)
    header: dict[str, float] = {}
    with path.open() as f:
        lines = f.read().split("\n")
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) == 2 and parts[0].lower() in {
            "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
        }:
            header[parts[0].lower()] = float(parts[1])
            i += 1
        else:
            break
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise TerrainError(f"{path}: missing ASC header key {key}")
    values = np.array(" ".join(lines[i:]).split(), dtype=float)
    n_rows, n_cols = int(header["nrows"]), int(header["ncols"])
    if values.size != n_rows * n_cols:
        raise TerrainError(
            f"{path}: expected {n_rows * n_cols} values, found {values.size}"
        )
    grid = values.reshape(n_rows, n_cols)
    if "nodata_value" in header:
        grid = np.where(grid == header["nodata_value"], np.nan, grid)
    return grid, header


def load_terrain(elevation_path: str | Path, zones_path: str | Path | None = None) -> TerrainGrid:
    """Load a terrain grid (and aligned integer zone raster) from .asc files."""
    elev, header = read_asc(elevation_path)
    zones = None
    if zones_path is not None:
        zgrid, zheader = read_asc(zones_path)
        if zgrid.shape != elev.shape:
            raise TerrainError("zone raster shape differs from elevation raster")
        zones = np.where(np.isnan(zgrid), -1, zgrid).astype(int)
    return TerrainGrid(
        n_rows=elev.shape[0],
        n_cols=elev.shape[1],
        cell_size_m=header["cellsize"],
        origin=(header["xllcorner"], header["yllcorner"]),
        elevation=elev,
        zone_of_cell=zones,
    )
