"""Shared fixtures: reference scenario (loaded once) and small builders."""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np
import pytest
import yaml

from floodadapt.flood import TerrainGrid
from floodadapt.network import Link, MultimodalNetwork, NetworkNode

REPO_ROOT = Path(__file__).resolve().parent.parent
REFERENCE_SCENARIO = REPO_ROOT / "scenarios" / "basin-3zone" / "scenario.yaml"


@pytest.fixture(scope="session")
def reference_scenario():
    from floodadapt.scenario import load_scenario

    return load_scenario(REFERENCE_SCENARIO)


@pytest.fixture(scope="session")
def tiny_scenario_dir(tmp_path_factory):
    """Copy of the reference scenario with a 5-year horizon and 60 trips,
    for fast episode-level tests."""
    dest = tmp_path_factory.mktemp("tiny") / "scenario"
    shutil.copytree(REFERENCE_SCENARIO.parent, dest)
    doc = yaml.safe_load((dest / "scenario.yaml").read_text())
    doc["name"] = "basin-3zone-tiny"
    doc["horizon"] = {"start_year": 2023, "end_year": 2027}
    doc["rainfall"]["periods"][0]["start_year"] = 2023
    doc["rainfall"]["periods"][0]["end_year"] = 2027
    doc["demand"]["trips_per_year"] = 60
    (dest / "scenario.yaml").write_text(yaml.safe_dump(doc, sort_keys=False))
    return dest


@pytest.fixture(scope="session")
def tiny_scenario(tiny_scenario_dir):
    from floodadapt.scenario import load_scenario

    return load_scenario(tiny_scenario_dir / "scenario.yaml")


def make_terrain(elevation, cell_size_m=1.0, origin=(0.0, 0.0), zones=None):
    elevation = np.asarray(elevation, dtype=float)
    return TerrainGrid(
        n_rows=elevation.shape[0], n_cols=elevation.shape[1],
        cell_size_m=cell_size_m, origin=origin, elevation=elevation,
        zone_of_cell=zones,
    )


def flat_basin(n=8, rim=10.0, floor=1.0, zones_value=None):
    """Uniform interior at `floor` enclosed by a raised rim."""
    elev = np.full((n, n), floor)
    elev[0, :] = elev[-1, :] = rim
    elev[:, 0] = elev[:, -1] = rim
    zones = None
    if zones_value is not None:
        zones = np.full((n, n), zones_value, dtype=int)
    return make_terrain(elev, zones=zones)


def make_link(lid, a, b, length, mode="drive", speed=50.0, geometry=None,
              zone_id=1, lanes=1, road_class="local", lighting=False,
              signals=False, modes=None):
    modes = frozenset(modes or [mode])
    return Link(
        id=lid, from_node=a, to_node=b, length_m=length, modes=modes,
        free_speed_kmh={m: speed for m in modes}, lanes=lanes,
        road_class=road_class, has_lighting=lighting, has_signals=signals,
        geometry=tuple(geometry) if geometry is not None else
        ((float(lid) + 0.5, 0.5),),
        zone_id=zone_id,
    )


def make_network(n_nodes, link_specs, **kwargs):
    """link_specs: iterable of (lid, a, b, length). Geometry defaults to one
    sample point per link at x = lid + 0.5 so per-link depths can be set
    through a 1-row raster."""
    nodes = [NetworkNode(i, float(i), 0.0) for i in range(n_nodes)]
    links = [make_link(lid, a, b, length, **kwargs)
             for lid, a, b, length in link_specs]
    return MultimodalNetwork(nodes, links)


def depth_field(depth_by_link, n_links=None):
    """FloodField whose cell (0, lid) carries the given link's depth, matched
    to the default make_link geometry."""
    from floodadapt.flood import FloodField

    n = n_links if n_links is not None else (max(depth_by_link) + 1)
    depths = np.zeros((1, n))
    for lid, d in depth_by_link.items():
        depths[0, lid] = d
    return FloodField(
        depth_mm=depths, event_year=2023, n_rows=1, n_cols=n,
        cell_size_m=1.0, origin=(0.0, 0.0), rain_volume_m3=0.0,
        drained_volume_m3=0.0, absorbed_volume_m3=0.0,
        total_water_volume_m3=0.0, exited_volume_m3=0.0,
    )
