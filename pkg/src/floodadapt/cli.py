"""Command-line interface: validate, simulate, train, evaluate, serve."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .env import Policy, evaluate_policy, train_q_learning
from .scenario import (RunStore, format_log_record, load_scenario,
                       write_impacts_csvs)


def _load(scenario_path: str):
    try:
        return load_scenario(scenario_path)
    except Exception as exc:
        raise click.ClickException(f"scenario validation failed: {exc}")


@click.group()
def main():
    """Flood-adaptation assessment engine."""


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
def validate(scenario_path):
    """Validate a scenario file and print its content hash."""
    sc = _load(scenario_path)
    click.echo(f"ok {sc.name} {sc.content_hash}")


def _read_action_script(path: str | None) -> dict:
    """JSON action script: list of {year, zone_id, action_id}."""
    if path is None or path == "none":
        return {}
    doc = json.loads(Path(path).read_text())
    script = {}
    for entry in doc:
        script[int(entry["year"])] = (int(entry["zone_id"]),
                                      int(entry["action_id"]))
    return script


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None,
              help="Episode seed (default: scenario seeds.default_run).")
@click.option("--actions", "actions_path", default=None,
              help="JSON action script, or 'none' for the no-op baseline.")
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--run-id", default=None)
def simulate(scenario_path, seed, actions_path, out_dir, run_id):
    """Run one fixed-action episode and persist log + impact CSVs."""
    sc = _load(scenario_path)
    seed = sc.seeds.get("default_run", 0) if seed is None else seed
    script = _read_action_script(actions_path)
    run_id = run_id or f"sim-{sc.content_hash[:8]}-seed{seed}"
    store = RunStore(Path(out_dir) / "runs")
    run_dir = store.create_run(run_id, sc, "manual")

    env = sc.make_env(seed)
    env.reset(seed)
    infos, lines = [], []
    total = 0.0
    done = False
    while not done:
        year = sc.start_year + env.year_index
        _, r, done, info = env.step(script.get(year))
        infos.append(info)
        lines.append(format_log_record(info))
        total += r
    store.append_log(run_id, lines)
    write_impacts_csvs(run_dir, infos, list(sc.assets.zone_ids))
    store.finish_run(run_id, steps=len(infos))
    click.echo(f"run {run_id}: {len(infos)} steps, return {total!r}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--episodes", type=int, default=300, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--epsilon", type=float, default=1.0, show_default=True,
              help="Initial exploration rate (decays linearly to 0.05).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="out", show_default=True)
def train(scenario_path, episodes, alpha, gamma, epsilon, seed, out_dir):
    """Train the tabular Q-learning agent; writes policy + learning curve."""
    sc = _load(scenario_path)
    policy, curve = train_q_learning(
        lambda: sc.make_env(seed), episodes=episodes, alpha=alpha,
        gamma=gamma, epsilon_start=epsilon, epsilon_end=0.05, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    policy_path = out / "policy.tsv"
    policy.save(policy_path)
    with open(out / "learning_curve.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["episode", "return"])
        for i, ret in enumerate(curve):
            w.writerow([i, repr(ret)])
    click.echo(f"trained {episodes} episodes; policy at {policy_path}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--policy", "policy_path", required=True,
              type=click.Path(exists=True))
@click.option("--episodes", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="out", show_default=True)
def evaluate(scenario_path, policy_path, episodes, seed, out_dir):
    """Greedy rollouts of a trained policy; writes an evaluation report."""
    sc = _load(scenario_path)
    policy = Policy.load(policy_path)
    env = sc.make_env(seed)
    report = evaluate_policy(env, policy, episodes, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "evaluation.json").write_text(json.dumps(report, indent=2))
    click.echo(f"mean return over {episodes} episodes: {report['mean_return']!r}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--out", "out_dir", default="out", show_default=True)
def serve(scenario_path, bind, out_dir):
    """Serve the HTTP session API for the planner UI."""
    import uvicorn

    from .service import create_app

    sc = _load(scenario_path)
    app = create_app(sc, RunStore(Path(out_dir) / "runs"))
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    sys.exit(main())
