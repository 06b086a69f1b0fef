"""Scenario document loading, cross-validation, hashing, and run persistence.

A scenario is one human-editable YAML file referencing its data files by
relative path (terrain/zone rasters, network CSVs, zones GeoJSON, POIs, hex
population). Loading validates every cross-reference and computes a content
hash over the document and all referenced files. Runs persist as one
directory per run id (scenario snapshot, line-delimited step log, CSVs).
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import rainfall as rf
from .access import (AccessibilityEngine, HexGrid, QoLParams, build_hex_grid,
                     compute_p75_normalizers, load_hex_population, load_pois)
from .env import (AdaptationAction, AdaptationEnv, RewardWeights,
                  SimulationAssets, validate_catalog)
from .flood import load_terrain
from .impacts import ConstructionCosts, CostModel, DamageCurve
from .network import (MODES, DepthDisruptionCurve, ModeCurve, generate_od_demand,
                      load_network, load_zones)


class ScenarioError(ValueError):
    """Scenario parse or cross-validation failure."""


REQUIRED_KEYS = ("name", "horizon", "rainfall", "terrain", "network", "zones",
                 "pois", "hex", "disruption_curves", "cost_model", "qol",
                 "actions", "reward_weights", "demand", "seeds")


@dataclass
class Scenario:
    """Parsed, cross-validated scenario plus the heavy simulation assets."""

    name: str
    path: Path
    base_dir: Path
    raw: dict
    content_hash: str
    assets: SimulationAssets
    demand_spec: dict
    seeds: dict

    @property
    def start_year(self) -> int:
        return self.assets.start_year

    @property
    def end_year(self) -> int:
        return self.assets.end_year

    def make_env(self, seed: int) -> AdaptationEnv:
        return AdaptationEnv(self.assets, seed=seed)


def _require(doc: dict, key: str, ctx: str = "scenario"):
    if key not in doc:
        raise ScenarioError(f"{ctx}: missing field '{key}'")
    return doc[key]


def _distribution(spec: dict) -> rf.DistributionSpec:
    kind = _require(spec, "type", "rainfall distribution").lower()
    if kind == "gumbel":
        return rf.Gumbel(float(spec["location_mm"]), float(spec["scale_mm"]))
    if kind == "lognormal":
        return rf.LogNormal(float(spec["mu"]), float(spec["sigma"]))
    if kind == "empirical":
        return rf.Empirical(tuple(float(v) for v in spec["values"]))
    raise ScenarioError(f"unknown rainfall distribution type '{kind}'")


def scenario_hash(doc: dict, files: list[Path]) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(doc, sort_keys=True, default=str).encode())
    for p in sorted(files):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    for key in REQUIRED_KEYS:
        _require(doc, key)
    base = path.parent

    def data_path(rel: str, fieldname: str) -> Path:
        p = base / rel
        if not p.exists():
            raise ScenarioError(f"{fieldname}: referenced file not found: {p}")
        return p

    horizon = doc["horizon"]
    start_year = int(_require(horizon, "start_year", "horizon"))
    end_year = int(_require(horizon, "end_year", "horizon"))
    if start_year >= end_year:
        raise ScenarioError("horizon: start_year must be < end_year")

    periods = [(int(p["start_year"]), int(p["end_year"]), _distribution(p["distribution"]))
               for p in _require(doc["rainfall"], "periods", "rainfall")]
    try:
        rain_model = rf.build_rainfall_model(periods, start_year, end_year)
    except rf.RainfallModelError as exc:
        raise ScenarioError(f"rainfall: {exc}") from exc

    terrain_path = data_path(doc["terrain"]["elevation"], "terrain.elevation")
    zones_raster_path = data_path(doc["terrain"]["zones_raster"], "terrain.zones_raster")
    nodes_path = data_path(doc["network"]["nodes"], "network.nodes")
    links_path = data_path(doc["network"]["links"], "network.links")
    zones_path = data_path(doc["zones"], "zones")
    pois_path = data_path(doc["pois"], "pois")
    hexpop_path = data_path(doc["hex"]["population"], "hex.population")

    terrain = load_terrain(terrain_path, zones_raster_path)
    network = load_network(nodes_path, links_path)
    zones = load_zones(zones_path)
    zone_ids = {z.id for z in zones}

    link_zones = {lk.zone_id for lk in network.links.values() if lk.zone_id is not None}
    missing = link_zones - zone_ids
    if missing:
        raise ScenarioError(
            f"network.links: zone ids {sorted(missing)} not present in zones file")
    raster_zones = set(np.unique(terrain.zone_of_cell).tolist()) - {-1}
    missing = raster_zones - zone_ids
    if missing:
        raise ScenarioError(
            f"terrain.zones_raster: zone ids {sorted(missing)} not in zones file")

    curves = {}
    for mode in MODES:
        spec = doc["disruption_curves"].get(mode)
        if spec is None:
            raise ScenarioError(f"disruption_curves: missing mode '{mode}'")
        curves[mode] = ModeCurve(tuple(float(c) for c in spec["coefficients"]),
                                 float(spec["cutoff_mm"]))
    curves = DepthDisruptionCurve(curves)
    curves.validate()

    cm = doc["cost_model"]
    cost_model = CostModel(
        construction=ConstructionCosts(
            base_cost_per_m={k: float(v) for k, v in
                             cm["construction"]["base_cost_per_m"].items()},
            per_lane_factor=float(cm["construction"]["per_lane_factor"]),
            lighting_per_m=float(cm["construction"]["lighting_per_m"]),
            signals_per_link=float(cm["construction"]["signals_per_link"]),
        ),
        damage_curves={k: DamageCurve(tuple((float(d), float(fr)) for d, fr in pts))
                       for k, pts in cm["damage_curves"].items()},
        vot_per_hour={k: float(v) for k, v in cm["vot_per_hour"].items()},
        cancellation_factor=float(cm.get("cancellation_factor", 0.8)),
    )
    cost_model.validate()

    actions_doc = doc["actions"]
    if not isinstance(actions_doc, list) or len(actions_doc) != 8:
        raise ScenarioError(
            f"actions: expected 8 actions, got {len(actions_doc) if isinstance(actions_doc, list) else 'non-list'}")
    catalog = validate_catalog([
        AdaptationAction(
            id=int(a["id"]), name=str(a.get("name", f"action-{a['id']}")),
            drainage_boost_mm=float(a.get("drainage_boost_mm", 0.0)),
            storage_boost_m3=float(a.get("storage_boost_m3", 0.0)),
            capex=float(a.get("capex", 0.0)),
            annual_maintenance=float(a.get("annual_maintenance", 0.0)),
            lifetime_years=(int(a["lifetime_years"])
                            if a.get("lifetime_years") is not None else None),
        ) for a in actions_doc
    ])

    rw = doc["reward_weights"]
    weights = RewardWeights(**{k: float(v) for k, v in rw.items()})
    weights.validate()

    demand = doc["demand"]
    shares = {k: float(v) for k, v in demand["mode_shares"].items()}
    od_weights = demand.get("od_weights")
    if od_weights is not None:
        od_weights = np.asarray(od_weights, dtype=float)
    seeds = {k: int(v) for k, v in doc["seeds"].items()}
    trips = generate_od_demand(
        zones, network, int(demand["trips_per_year"]), shares,
        seed=seeds.get("demand", 0), od_weights=od_weights,
    )

    hexdoc = doc["hex"]
    x0, y0 = terrain.origin
    extent = (x0, y0, x0 + terrain.n_cols * terrain.cell_size_m,
              y0 + terrain.n_rows * terrain.cell_size_m)
    grid = build_hex_grid(
        extent, float(hexdoc["resolution_m"]),
        population=load_hex_population(hexpop_path), zones=zones,
    )

    qol_doc = doc["qol"]
    category_weights = {k: float(v) for k, v in qol_doc["category_weights"].items()}
    pois = load_pois(pois_path, categories=set(category_weights))
    thresholds = {k: float(v) for k, v in qol_doc["thresholds_s"].items()}
    p75 = qol_doc.get("p75_norm", "auto")
    params = QoLParams(
        neighbor_weight=float(qol_doc.get("neighbor_weight", 0.5)),
        p75_norm={c: 1.0 for c in category_weights} if p75 == "auto"
        else {k: float(v) for k, v in p75.items()},
        category_weights=category_weights,
        thresholds_s=thresholds,
    )
    params.validate()
    engine = AccessibilityEngine(
        grid, network, pois, params,
        snap_radius_m=float(hexdoc.get("snap_radius_m", 300.0)))
    if p75 == "auto":
        norm = compute_p75_normalizers(engine, curves)
        params = QoLParams(params.neighbor_weight, norm, params.category_weights,
                           params.thresholds_s)
        engine.params = params

    assets = SimulationAssets(
        terrain=terrain, zones=zones, network=network, trips=trips,
        curves=curves, cost_model=cost_model, engine=engine,
        rainfall_model=rain_model, catalog=catalog, weights=weights,
        start_year=start_year, end_year=end_year,
        mask_bits_budget=int(doc.get("rl", {}).get("state_mask_bits", 16)),
    )

    files = [terrain_path, zones_raster_path, nodes_path, links_path,
             zones_path, pois_path, hexpop_path]
    return Scenario(
        name=str(doc["name"]), path=path, base_dir=base, raw=doc,
        content_hash=scenario_hash(doc, files), assets=assets,
        demand_spec=demand, seeds=seeds,
    )


# ---------------------------------------------------------------------------
# run persistence
# ---------------------------------------------------------------------------

def format_log_record(info: dict) -> str:
    """One deterministic JSON line per step (sorted keys, repr floats)."""
    rec = {
        "year": info["year"],
        "action": list(info["action"]) if info["action"] is not None else None,
        "duplicate_install": info["duplicate_install"],
        "intensity_mm": info["intensity_mm"],
        "per_zone": {str(z): terms for z, terms in info["per_zone"].items()},
        "R": info["reward"],
    }
    return json.dumps(rec, sort_keys=True)


@dataclass
class RunRecord:
    run_id: str
    scenario_hash: str
    mode: str  # manual | trained | evaluation
    steps: int
    created_at: str
    finished_at: Optional[str] = None
    policy_file: Optional[str] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("run_id", "scenario_hash", "mode", "steps", "created_at",
                 "finished_at", "policy_file")}


class RunStore:
    """Directory-per-run persistence (desk scale, diff-able, no database)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def create_run(self, run_id: str, scenario: Scenario, mode: str) -> Path:
        d = self.run_dir(run_id)
        if d.exists():
            shutil.rmtree(d)
        d.mkdir(parents=True)
        shutil.copy(scenario.path, d / "scenario.yaml")
        record = RunRecord(
            run_id=run_id, scenario_hash=scenario.content_hash, mode=mode,
            steps=0, created_at=datetime.now(timezone.utc).isoformat())
        (d / "record.json").write_text(json.dumps(record.to_dict(), indent=2))
        return d

    def append_log(self, run_id: str, lines: list[str]) -> None:
        with open(self.run_dir(run_id) / "log.jsonl", "a") as f:
            for line in lines:
                f.write(line + "\n")

    def finish_run(self, run_id: str, steps: int,
                   policy_file: Optional[str] = None) -> None:
        d = self.run_dir(run_id)
        rec = json.loads((d / "record.json").read_text())
        rec["steps"] = steps
        rec["finished_at"] = datetime.now(timezone.utc).isoformat()
        rec["policy_file"] = policy_file
        (d / "record.json").write_text(json.dumps(rec, indent=2))

    def list_runs(self) -> list[dict]:
        out = []
        for d in sorted(self.root.iterdir()):
            rec = d / "record.json"
            if rec.exists():
                out.append(json.loads(rec.read_text()))
        return out

    def read_run(self, run_id: str) -> dict:
        d = self.run_dir(run_id)
        if not (d / "record.json").exists():
            raise ScenarioError(f"unknown run id {run_id}")
        rec = json.loads((d / "record.json").read_text())
        log_path = d / "log.jsonl"
        rec["log"] = ([json.loads(l) for l in log_path.read_text().splitlines()]
                      if log_path.exists() else [])
        return rec


def write_impacts_csvs(run_dir: Path, step_infos: list[dict],
                       zone_ids: list[int]) -> None:
    """impacts_total.csv (fixed columns zone_id,I,D,C,Q,A,M; sums, Q mean)
    and impacts_by_year.csv with the full per-year breakdown."""
    with open(run_dir / "impacts_by_year.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["year", "zone_id", "I", "D", "C", "Q", "A", "M",
                    "completed", "delayed", "cancelled"])
        for info in step_infos:
            for z in zone_ids:
                t = info["per_zone"][z]
                w.writerow([info["year"], z, repr(t["I"]), repr(t["D"]),
                            repr(t["C"]), repr(t["Q"]), repr(t["A"]),
                            repr(t["M"]), t["completed"], t["delayed"],
                            t["cancelled"]])
    with open(run_dir / "impacts_total.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["zone_id", "I", "D", "C", "Q", "A", "M"])
        n = max(len(step_infos), 1)
        for z in zone_ids:
            sums = {k: sum(info["per_zone"][z][k] for info in step_infos)
                    for k in ("I", "D", "C", "Q", "A", "M")}
            w.writerow([z, repr(sums["I"]), repr(sums["D"]), repr(sums["C"]),
                        repr(sums["Q"] / n), repr(sums["A"]), repr(sums["M"])])
