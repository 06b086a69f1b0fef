"""HTTP session service for interactive planning and training jobs.

Sessions wrap one environment each behind a lock; what-if requests step a
clone of the environment so session state is never mutated. One training job
may run at a time, in a background thread, polled via GET /train/{job}.
"""

from __future__ import annotations

import copy
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .access import qol_by_hex
from .env import AdaptationEnv, train_q_learning
from .scenario import RunStore, Scenario, format_log_record


class CreateSession(BaseModel):
    seed: Optional[int] = None


class ActionBody(BaseModel):
    action: Optional[dict] = None  # {"zone_id": int, "action_id": int} or null


class ResetBody(BaseModel):
    seed: int


class TrainBody(BaseModel):
    episodes: int = 100
    alpha: float = 0.5
    gamma: float = 0.5
    epsilon: float = 1.0
    seed: int = 0


def _clone_env(env: AdaptationEnv) -> AdaptationEnv:
    """Copy mutable episode state; share the immutable assets and the
    content-addressed transport cache."""
    clone = AdaptationEnv.__new__(AdaptationEnv)
    clone.assets = env.assets
    clone.seed = env.seed
    clone._cache = env._cache
    clone._cache_size = env._cache_size
    clone._last_flood = env._last_flood
    clone.year_index = env.year_index
    clone.done = env.done
    clone.zone_states = copy.deepcopy(env.zone_states)
    clone._last_decile = env._last_decile
    return clone


def _obs_payload(obs) -> dict:
    return {"year_index": obs.year_index,
            "intensity_decile": obs.intensity_decile,
            "zone_masks": list(obs.zone_masks),
            "state_key": obs.key()}


def _step_payload(env: AdaptationEnv, obs, reward, done, info) -> dict:
    hexq = qol_by_hex(env.assets.engine, env._last_flood, env.assets.curves)
    return {
        "observation": _obs_payload(obs),
        "reward": reward,
        "done": done,
        "year": info["year"],
        "action": list(info["action"]) if info["action"] else None,
        "duplicate_install": info["duplicate_install"],
        "intensity_mm": info["intensity_mm"],
        "per_zone": {str(z): t for z, t in info["per_zone"].items()},
        "hex_qol": [{"q": q, "r": r, "qol": v}
                    for (q, r), v in sorted(hexq.items())],
    }


def create_app(scenario: Scenario, store: RunStore) -> FastAPI:
    app = FastAPI(title="floodadapt", version="0.1.0")
    # The browser planner is typically served from a different origin than
    # the API; the service holds no credentials, so permissive CORS is fine.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, dict] = {}
    train_jobs: dict[str, dict] = {}
    train_lock = threading.Lock()

    def get_session(session_id: str) -> dict:
        if session_id not in sessions:
            raise HTTPException(404, f"unknown session {session_id}")
        return sessions[session_id]

    def new_run(mode: str) -> str:
        run_id = f"{mode}-{uuid.uuid4().hex[:10]}"
        store.create_run(run_id, scenario, mode)
        return run_id

    @app.get("/scenario")
    def get_scenario():
        a = scenario.assets
        return {
            "name": scenario.name,
            "hash": scenario.content_hash,
            "horizon": {"start_year": a.start_year, "end_year": a.end_year},
            "zones": [{"id": z.id, "name": z.name, "population": z.population,
                       "polygon": [list(p) for p in z.polygon]}
                      for z in sorted(a.zones, key=lambda z: z.id)],
            "hex": {"resolution_m": a.engine.grid.resolution_m,
                    "cells": [{"q": q, "r": r,
                               "center": list(a.engine.grid.cells[(q, r)].center),
                               "population": a.engine.grid.cells[(q, r)].population,
                               "zone_id": a.engine.grid.cells[(q, r)].zone_id}
                              for q, r in a.engine.hex_keys]},
            "actions": [{"id": act.id, "name": act.name,
                         "drainage_boost_mm": act.drainage_boost_mm,
                         "storage_boost_m3": act.storage_boost_m3,
                         "capex": act.capex,
                         "annual_maintenance": act.annual_maintenance,
                         "lifetime_years": act.lifetime_years}
                        for act in a.catalog],
            "reward_weights": {k: getattr(a.weights, k) for k in
                               ("beta_I", "beta_D", "beta_C", "beta_Q",
                                "beta_A", "beta_M")},
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSession):
        seed = body.seed if body.seed is not None else \
            scenario.seeds.get("default_run", 0)
        env = scenario.make_env(seed)
        obs = env.reset(seed)
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = {
            "env": env, "lock": threading.Lock(), "cumulative_reward": 0.0,
            "steps": 0, "last_info": None, "run_id": new_run("manual"),
            "history": [],
        }
        return {"session_id": session_id, "seed": seed,
                "observation": _obs_payload(obs)}

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str):
        s = get_session(session_id)
        with s["lock"]:
            env: AdaptationEnv = s["env"]
            a = env.assets
            year = a.start_year + min(env.year_index, a.n_years - 1)
            zone_states = {
                str(z): {
                    "installed": [[aid, iy] for aid, iy in
                                  env.zone_states[z].installed],
                    "live": [[aid, iy] for aid, iy in
                             env.zone_states[z].live(a.catalog, year)],
                } for z in a.zone_ids
            }
            last = s["last_info"]
            return {
                "year": year,
                "year_index": env.year_index,
                "done": env.done,
                "steps": s["steps"],
                "cumulative_reward": s["cumulative_reward"],
                "zone_states": zone_states,
                "last_per_zone": ({str(z): t for z, t in
                                   last["per_zone"].items()} if last else None),
                "action_history": s["history"],
            }

    def _decode_body_action(env: AdaptationEnv, body: ActionBody):
        if body.action is None:
            return None
        if "zone_id" not in body.action or "action_id" not in body.action:
            raise HTTPException(422, "action needs zone_id and action_id")
        try:
            return env.decode_action(
                (body.action["zone_id"], body.action["action_id"]))
        except ValueError as exc:
            raise HTTPException(422, str(exc))

    @app.post("/sessions/{session_id}/step")
    def step_session(session_id: str, body: ActionBody):
        s = get_session(session_id)
        with s["lock"]:
            env: AdaptationEnv = s["env"]
            if env.done:
                raise HTTPException(409, "episode is finished")
            action = _decode_body_action(env, body)
            obs, reward, done, info = env.step(action)
            s["cumulative_reward"] += reward
            s["steps"] += 1
            s["last_info"] = info
            s["history"].append({"year": info["year"],
                                 "action": list(action) if action else None,
                                 "reward": reward})
            store.append_log(s["run_id"], [format_log_record(info)])
            if done:
                store.finish_run(s["run_id"], steps=s["steps"])
            return _step_payload(env, obs, reward, done, info)

    @app.post("/sessions/{session_id}/whatif")
    def whatif(session_id: str, body: ActionBody):
        s = get_session(session_id)
        with s["lock"]:
            env: AdaptationEnv = s["env"]
            if env.done:
                raise HTTPException(409, "episode is finished")
            action = _decode_body_action(env, body)
            probe = _clone_env(env)
            obs, reward, done, info = probe.step(action)
            payload = _step_payload(probe, obs, reward, done, info)
            payload["committed"] = False
            return payload

    @app.post("/sessions/{session_id}/reset")
    def reset_session(session_id: str, body: ResetBody):
        s = get_session(session_id)
        with s["lock"]:
            env: AdaptationEnv = s["env"]
            obs = env.reset(body.seed)
            s["cumulative_reward"] = 0.0
            s["steps"] = 0
            s["last_info"] = None
            s["history"] = []
            s["run_id"] = new_run("manual")
            return {"observation": _obs_payload(obs), "seed": body.seed}

    @app.post("/train", status_code=202)
    def start_training(body: TrainBody):
        with train_lock:
            if any(j["status"] == "running" for j in train_jobs.values()):
                raise HTTPException(409, "a training job is already running")
            job_id = uuid.uuid4().hex[:12]
            job = {"status": "running", "curve": [], "policy_file": None,
                   "error": None, "params": body.model_dump()}
            train_jobs[job_id] = job

        def work():
            try:
                run_id = new_run("trained")
                policy, curve = train_q_learning(
                    lambda: scenario.make_env(body.seed),
                    episodes=body.episodes, alpha=body.alpha,
                    gamma=body.gamma, epsilon_start=body.epsilon,
                    epsilon_end=0.05, seed=body.seed)
                policy_path = store.run_dir(run_id) / "policy.tsv"
                policy.save(policy_path)
                store.finish_run(run_id, steps=0, policy_file=str(policy_path))
                job["curve"] = curve
                job["policy_file"] = str(policy_path)
                job["status"] = "done"
            except Exception as exc:  # surfaced via polling
                job["error"] = str(exc)
                job["status"] = "failed"

        threading.Thread(target=work, daemon=True).start()
        return {"job_id": job_id}

    @app.get("/train/{job_id}")
    def training_status(job_id: str):
        if job_id not in train_jobs:
            raise HTTPException(404, f"unknown training job {job_id}")
        return train_jobs[job_id]

    @app.get("/runs")
    def list_runs():
        return store.list_runs()

    @app.get("/runs/{run_id}")
    def read_run(run_id: str):
        try:
            return store.read_run(run_id)
        except ValueError as exc:
            raise HTTPException(404, str(exc))

    return app
