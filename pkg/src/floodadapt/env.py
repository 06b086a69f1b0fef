"""Year-stepped adaptation environment (2023-2100) and tabular Q-learning.

Each step: apply one (zone, action) adaptation or no-op, sample the year's
rainfall event, compute the flood with current protection, route all trips,
compute accessibility/QoL, assemble per-zone impacts, and return the
weighted-sum reward R = sum_i (bI*I_i + bD*D_i + bC*C_i + bQ*Q_i + bA*A_i
+ bM*M_i). Episodes are exactly horizon-length; everything is deterministic
per seed via year-keyed rainfall substreams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import rainfall as rf
from .access import AccessibilityEngine, aggregate_qol_by_zone, qol_by_hex
from .flood import TerrainGrid, ZoneProtection, compute_flood_depths
from .impacts import CostModel, ImpactSummary, assemble_impacts
from .network import (DepthDisruptionCurve, MultimodalNetwork, Trip, Zone,
                      all_link_depths, route_all)

N_CATALOG_ACTIONS = 8
_TRAIN_TAG = 0x7EA41234
_EVAL_TAG = 0xE7A10235


class EnvError(ValueError):
    """Invalid environment input or transition."""


@dataclass(frozen=True)
class AdaptationAction:
    id: int                      # 0-7 catalog slot
    name: str
    drainage_boost_mm: float = 0.0
    storage_boost_m3: float = 0.0
    capex: float = 0.0
    annual_maintenance: float = 0.0
    lifetime_years: Optional[int] = None  # None = permanent

    def validate(self) -> None:
        if not 0 <= self.id < N_CATALOG_ACTIONS:
            raise EnvError(f"action id must be 0-7, got {self.id}")
        if self.drainage_boost_mm < 0 or self.storage_boost_m3 < 0:
            raise EnvError(f"action {self.id}: boosts must be non-negative")
        if self.drainage_boost_mm == 0 and self.storage_boost_m3 == 0:
            raise EnvError(f"action {self.id}: needs a strictly positive effect")
        if self.capex < 0 or self.annual_maintenance < 0:
            raise EnvError(f"action {self.id}: costs must be non-negative")
        if self.lifetime_years is not None and self.lifetime_years < 1:
            raise EnvError(f"action {self.id}: lifetime must be >= 1 year")


def validate_catalog(catalog: Sequence[AdaptationAction]) -> tuple:
    if len(catalog) != N_CATALOG_ACTIONS:
        raise EnvError(f"expected 8 actions in the catalog, got {len(catalog)}")
    ids = sorted(a.id for a in catalog)
    if ids != list(range(N_CATALOG_ACTIONS)):
        raise EnvError("catalog action ids must be exactly 0..7")
    for a in catalog:
        a.validate()
    return tuple(sorted(catalog, key=lambda a: a.id))


@dataclass
class ZoneAdaptationState:
    zone_id: int
    installed: list = field(default_factory=list)  # (action_id, install_year)

    def live(self, catalog: Sequence[AdaptationAction], year: int) -> list:
        out = []
        for aid, iy in self.installed:
            a = catalog[aid]
            if iy <= year and (a.lifetime_years is None or year < iy + a.lifetime_years):
                out.append((aid, iy))
        return out

    def protection(self, catalog, year: int) -> ZoneProtection:
        drain = storage = 0.0
        for aid, _ in self.live(catalog, year):
            drain += catalog[aid].drainage_boost_mm
            storage += catalog[aid].storage_boost_m3
        return ZoneProtection(drain, storage)


@dataclass(frozen=True)
class RewardWeights:
    beta_I: float = -1.0
    beta_D: float = -1.0
    beta_C: float = -1.0
    beta_Q: float = 1.0
    beta_A: float = -1.0
    beta_M: float = -1.0

    def validate(self) -> None:
        for name in ("beta_I", "beta_D", "beta_C", "beta_Q", "beta_A", "beta_M"):
            if not np.isfinite(getattr(self, name)):
                raise EnvError(f"{name} must be finite")


@dataclass(frozen=True)
class Observation:
    year_index: int
    intensity_decile: int
    zone_masks: tuple  # per zone (sorted by id): installed-action bitmask

    def key(self) -> str:
        masks = ",".join(str(m) for m in self.zone_masks)
        return f"y{self.year_index}|d{self.intensity_decile}|m{masks}"

    def table_key(self) -> str:
        """Q-table state key. Buckets the year by decade so the table stays
        small enough for tabular visitation counts; the observation itself
        keeps the exact year."""
        masks = ",".join(str(m) for m in self.zone_masks)
        return f"y{self.year_index // 10}|d{self.intensity_decile}|m{masks}"


def compute_reward(
    impacts: ImpactSummary,
    action_costs: Mapping[int, tuple],
    weights: RewardWeights,
) -> float:
    """Weighted per-zone sum of (I, D, C, Q, A, M); no normalization."""
    weights.validate()
    if set(action_costs) != set(impacts.zone_ids):
        raise EnvError("zone sets of impacts and action costs differ")
    r = 0.0
    for z in impacts.zone_ids:
        a, m = action_costs[z]
        r += (weights.beta_I * impacts.I[z] + weights.beta_D * impacts.D[z]
              + weights.beta_C * impacts.C[z] + weights.beta_Q * impacts.Q[z]
              + weights.beta_A * a + weights.beta_M * m)
    return r


@dataclass
class SimulationAssets:
    """Immutable inputs shared by every episode of one scenario."""

    terrain: TerrainGrid
    zones: Sequence[Zone]
    network: MultimodalNetwork
    trips: Sequence[Trip]
    curves: DepthDisruptionCurve
    cost_model: CostModel
    engine: AccessibilityEngine
    rainfall_model: rf.RainfallModel
    catalog: tuple
    weights: RewardWeights
    start_year: int
    end_year: int
    mask_bits_budget: int = 16
    deciles: list = None
    _baseline: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.catalog = validate_catalog(self.catalog)
        if self.deciles is None:
            self.deciles = rf.intensity_deciles(self.rainfall_model)
        self.zone_ids = tuple(sorted(z.id for z in self.zones))

    @property
    def n_years(self) -> int:
        return self.end_year - self.start_year + 1

    def baseline(self) -> dict:
        """No-flood routing and QoL, computed once."""
        if self._baseline is None:
            results = route_all(self.network, None, self.curves, self.trips,
                                include_paths=False)
            times = {r.trip_id: r.baseline_time_s for r in results}
            hexq = qol_by_hex(self.engine, None, self.curves)
            q = aggregate_qol_by_zone(hexq, self.engine.grid, self.zone_ids)
            self._baseline = {"results": results, "times": times,
                              "hex_qol": hexq, "qol": q}
        return self._baseline


class AdaptationEnv:
    """Episodic MDP over the scenario horizon; single-writer per instance.

    Action encoding: index 0 is no-op; index 1 + zone_pos * 8 + action_id
    selects a catalog action in a zone (zones sorted by id).
    """

    def __init__(self, assets: SimulationAssets, seed: int = 0,
                 transport_cache_size: int = 512):
        self.assets = assets
        self.seed = seed
        self._cache: dict = {}
        self._cache_size = transport_cache_size
        self._last_flood = None
        self.reset(seed)

    @property
    def n_actions(self) -> int:
        return 1 + len(self.assets.zone_ids) * N_CATALOG_ACTIONS

    def decode_action(self, action) -> Optional[tuple]:
        """Normalize an action to (zone_id, action_id) or None for no-op."""
        if action is None:
            return None
        if isinstance(action, (tuple, list)):
            zone_id, aid = int(action[0]), int(action[1])
            if zone_id not in self.assets.zone_ids:
                raise EnvError(f"unknown zone {zone_id}")
            if not 0 <= aid < N_CATALOG_ACTIONS:
                raise EnvError(f"unknown action id {aid}")
            return zone_id, aid
        idx = int(action)
        if not 0 <= idx < self.n_actions:
            raise EnvError(f"action index {idx} out of range")
        if idx == 0:
            return None
        idx -= 1
        return self.assets.zone_ids[idx // N_CATALOG_ACTIONS], idx % N_CATALOG_ACTIONS

    def reset(self, seed: Optional[int] = None):
        if seed is not None:
            self.seed = int(seed)
        self.year_index = 0
        self.done = False
        self.zone_states = {z: ZoneAdaptationState(z) for z in self.assets.zone_ids}
        self._last_decile = 0
        return self._observation()

    def _observation(self) -> Observation:
        zids = self.assets.zone_ids
        year = self.assets.start_year + min(self.year_index,
                                            self.assets.n_years - 1)
        full = len(zids) * N_CATALOG_ACTIONS <= self.assets.mask_bits_budget
        masks = []
        for z in zids:
            live = self.zone_states[z].live(self.assets.catalog, year)
            if full:
                m = 0
                for aid, _ in live:
                    m |= 1 << aid
            else:
                m = 1 if live else 0
            masks.append(m)
        return Observation(
            year_index=min(self.year_index, self.assets.n_years - 1),
            intensity_decile=self._last_decile,
            zone_masks=tuple(masks),
        )

    def _transport_block(self, flood) -> dict:
        """Routing + QoL impacts for one flood, memoized on link depths."""
        a = self.assets
        depths = all_link_depths(a.network, flood)
        arr = np.asarray([depths[k] for k in sorted(depths)])
        key = hashlib.sha1(arr.tobytes()).hexdigest()
        if key in self._cache:
            return self._cache[key]
        base = a.baseline()
        if not arr.any():
            results = base["results"]
            qol = base["qol"]
            flood_for_damage = None
        else:
            results = route_all(a.network, flood, a.curves, a.trips,
                                include_paths=False,
                                baseline_times=base["times"])
            hexq = qol_by_hex(a.engine, flood, a.curves)
            qol = aggregate_qol_by_zone(hexq, a.engine.grid, a.zone_ids)
            flood_for_damage = flood
        impacts = assemble_impacts(a.network, flood_for_damage, results,
                                   a.trips, qol, a.cost_model, a.zone_ids)
        block = {"impacts": impacts}
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = block
        return block

    def step(self, action):
        """Advance one simulated year; returns (obs, reward, done, info)."""
        if self.done:
            raise EnvError("cannot step a finished episode")
        a = self.assets
        year = a.start_year + self.year_index
        decoded = self.decode_action(action)

        duplicate = False
        capex_by_zone = {z: 0.0 for z in a.zone_ids}
        if decoded is not None:
            zone_id, aid = decoded
            state = self.zone_states[zone_id]
            if any(live_aid == aid for live_aid, _ in
                   state.live(a.catalog, year)):
                duplicate = True  # signaled no-op, no capex
            else:
                state.installed.append((aid, year))
                capex_by_zone[zone_id] = a.catalog[aid].capex

        maint_by_zone = {}
        protections = {}
        for z in a.zone_ids:
            st = self.zone_states[z]
            maint_by_zone[z] = sum(a.catalog[aid].annual_maintenance
                                   for aid, _ in st.live(a.catalog, year))
            protections[z] = st.protection(a.catalog, year)

        event = rf.sample_annual_event(a.rainfall_model, year, self.seed)
        flood = compute_flood_depths(a.terrain, event, protections)
        self._last_flood = flood
        block = self._transport_block(flood)
        impacts = block["impacts"]
        action_costs = {z: (capex_by_zone[z], maint_by_zone[z])
                        for z in a.zone_ids}
        reward = compute_reward(impacts, action_costs, a.weights)

        self._last_decile = rf.intensity_decile(a.deciles, event.intensity_mm)
        self.year_index += 1
        self.done = self.year_index >= a.n_years
        obs = self._observation()
        info = {
            "year": year,
            "action": decoded,
            "duplicate_install": duplicate,
            "intensity_mm": event.intensity_mm,
            "intensity_decile": self._last_decile,
            "per_zone": {
                z: {
                    "I": impacts.I[z], "D": impacts.D[z], "C": impacts.C[z],
                    "Q": impacts.Q[z], "A": capex_by_zone[z],
                    "M": maint_by_zone[z],
                    "completed": impacts.completed[z],
                    "delayed": impacts.delayed[z],
                    "cancelled": impacts.cancelled[z],
                } for z in a.zone_ids
            },
            "impacts": impacts,
            "action_costs": action_costs,
            "reward": reward,
        }
        return obs, reward, self.done, info


# ---------------------------------------------------------------------------
# tabular Q-learning
# ---------------------------------------------------------------------------

def _state_key(obs) -> str:
    if hasattr(obs, "table_key"):
        return obs.table_key()
    return obs.key() if hasattr(obs, "key") else str(obs)


@dataclass
class Policy:
    """Sparse Q-table (0 for unseen pairs) plus training provenance."""

    q: dict                 # (state key, action index) -> value
    n_actions: int
    hyperparams: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def greedy_action(self, state_key: str) -> Optional[int]:
        """Best recorded action for the state; None when the state was never
        visited (callers fall back to no-op)."""
        best_a, best_v = None, None
        for a in range(self.n_actions):
            v = self.q.get((state_key, a))
            if v is not None and (best_v is None or v > best_v):
                best_a, best_v = a, v
        return best_a

    def save(self, path) -> None:
        """Flat tab-separated key-value file: state, action, value."""
        import json

        with open(path, "w") as f:
            f.write("# floodadapt policy v1\n")
            f.write("#meta\t" + json.dumps(
                {"n_actions": self.n_actions,
                 "hyperparams": self.hyperparams,
                 "metadata": self.metadata}, sort_keys=True) + "\n")
            for (s, a) in sorted(self.q):
                f.write(f"{s}\t{a}\t{self.q[(s, a)]!r}\n")

    @classmethod
    def load(cls, path) -> "Policy":
        import json

        q = {}
        n_actions, hyper, meta = 0, {}, {}
        with open(path) as f:
            for line in f:
                line = line.rstrip("\n")
                if line.startswith("#meta\t"):
                    doc = json.loads(line.split("\t", 1)[1])
                    n_actions = doc["n_actions"]
                    hyper, meta = doc["hyperparams"], doc["metadata"]
                elif line.startswith("#") or not line:
                    continue
                else:
                    s, a, v = line.split("\t")
                    q[(s, int(a))] = float(v)
        return cls(q=q, n_actions=n_actions, hyperparams=hyper, metadata=meta)


def train_q_learning(
    env_factory,
    episodes: int,
    alpha: float = 0.1,
    gamma: float = 0.95,
    epsilon_start: float = 1.0,
    epsilon_end: float = 0.05,
    seed: int = 0,
    max_steps_per_episode: Optional[int] = None,
) -> tuple:
    """One-step Q-learning with epsilon-greedy exploration (linear decay).

    Returns (Policy, per-episode return list). Deterministic per seed: the
    exploration stream and each episode's environment seed derive from it.
    """
    if not 0.0 < alpha <= 1.0:
        raise EnvError(f"alpha must be in (0, 1], got {alpha}")
    if not 0.0 <= gamma <= 1.0:
        raise EnvError(f"gamma must be in [0, 1], got {gamma}")
    for e in (epsilon_start, epsilon_end):
        if not 0.0 <= e <= 1.0:
            raise EnvError(f"epsilon must be in [0, 1], got {e}")
    if episodes < 1:
        raise EnvError("episodes must be >= 1")

    env = env_factory()
    n_actions = env.n_actions
    rng = np.random.default_rng(np.random.SeedSequence([_TRAIN_TAG, seed]))
    q: dict = {}
    curve = []

    def q_get(s, a):
        return q.get((s, a), 0.0)

    def best_value(s):
        return max(q_get(s, a) for a in range(n_actions))

    for ep in range(episodes):
        frac = ep / max(episodes - 1, 1)
        epsilon = epsilon_start + (epsilon_end - epsilon_start) * frac
        ep_seed = int(np.random.SeedSequence(
            [_TRAIN_TAG, seed, ep]).generate_state(1)[0])
        obs = env.reset(ep_seed)
        s = _state_key(obs)
        total = 0.0
        done = False
        steps = 0
        while not done:
            if rng.random() < epsilon:
                a = int(rng.integers(n_actions))
            else:
                a = max(range(n_actions), key=lambda x: (q_get(s, x), -x))
            obs, r, done, step_info = env.step(a)
            s2 = _state_key(obs)
            # bootstrap through time-limit truncations, cut at true terminals
            terminal = done and not step_info.get("truncated", False)
            target = r if terminal else r + gamma * best_value(s2)
            q[(s, a)] = q_get(s, a) + alpha * (target - q_get(s, a))
            s = s2
            total += r
            steps += 1
            if max_steps_per_episode and steps >= max_steps_per_episode:
                break
        curve.append(total)

    policy = Policy(
        q=q, n_actions=n_actions,
        hyperparams={"episodes": episodes, "alpha": alpha, "gamma": gamma,
                     "epsilon_start": epsilon_start, "epsilon_end": epsilon_end,
                     "seed": seed},
        metadata={"episodes_trained": episodes},
    )
    return policy, curve


def evaluate_policy(
    env,
    policy: Optional[Policy],
    n_episodes: int,
    seed: int = 0,
) -> dict:
    """Greedy rollouts; policy None (or an unseen state) means no-op.

    Returns mean return, per-term totals averaged over episodes, and the
    per-episode action/impact trace.
    """
    report = {"episodes": [], "mean_return": 0.0, "per_term_totals": {}}
    if n_episodes == 0:
        return report
    term_totals = {t: 0.0 for t in ("I", "D", "C", "Q", "A", "M")}
    for i in range(n_episodes):
        ep_seed = int(np.random.SeedSequence(
            [_EVAL_TAG, seed, i]).generate_state(1)[0])
        obs = env.reset(ep_seed)
        done = False
        total = 0.0
        trace = []
        while not done:
            s = _state_key(obs)
            a = policy.greedy_action(s) if policy is not None else None
            unseen = a is None
            if unseen:
                a = 0
            obs, r, done, info = env.step(a)
            total += r
            for z, terms in info.get("per_zone", {}).items():
                for t in term_totals:
                    term_totals[t] += terms[t]
            trace.append({"year": info.get("year"), "action": info.get("action", a),
                          "unseen_state": unseen, "reward": r})
        report["episodes"].append({"seed": ep_seed, "return": total,
                                   "actions": trace})
    report["mean_return"] = sum(e["return"] for e in report["episodes"]) / n_episodes
    report["per_term_totals"] = {t: v / n_episodes for t, v in term_totals.items()}
    return report
