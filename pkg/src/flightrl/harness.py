"""Experiment orchestration: train / baseline / eval / compare.

All artifacts are text: CSV for data, flat key-value manifests, SVG for
figures. A single seed fans out into named RNG streams (init, noise,
sampling, scenario) so that ablations only change the randomness they
are meant to change.
"""

import csv
import hashlib
import math
import os
import time

import numpy as np

from . import autopilot, ddpg
from . import neuralnet as nn
from .config import ConfigError, ExperimentConfig, Scenario
from .envmdp import FlightEnv

CURVE_HEADER = ["episode", "steps", "episode_reward", "avg_reward_30", "sigma"]
TRAJECTORY_HEADER = [
    "t", "a_zc", "a_zc_shaped", "a_z", "alpha", "q", "theta", "mach",
    "height", "delta", "delta_dot", "delta_c", "k_dc", "k_a", "k_i", "k_g",
    "reward",
]
SUMMARY_HEADER = [
    "run", "alpha0", "mach0", "height0", "steps", "diverged",
    "steady_state_error", "overshoot", "undershoot", "max_delta",
    "max_delta_dot", "total_reward",
]


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path, expect_header=None):
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            rows = [[float(v) for v in row] for row in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if expect_header is not None and header != expect_header:
        raise ValueError(f"{path}: column schema {header} does not match "
                         f"{expect_header}")
    return header, rows


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config, seed, entries):
    """Atomic write of the run manifest."""
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write("manifestv1\n")
        f.write(f"seed = {seed}\n")
        for key, value in entries.items():
            f.write(f"{key} = {value}\n")
        for line in config.snapshot_lines():
            f.write(line + "\n")
    os.replace(tmp, path)


def rng_streams(seed):
    """Named deterministic streams fanned out from one seed."""
    init, noise, sample, scenario = np.random.SeedSequence(seed).spawn(4)
    return {
        "init": np.random.default_rng(init),
        "noise": np.random.default_rng(noise),
        "sample": np.random.default_rng(sample),
        "scenario": np.random.default_rng(scenario),
    }


def build_env(config, shaped=True, action_mode="gains", normalize=True,
              command=None):
    return FlightEnv(
        hp=config.hp,
        envelope=config.envelope,
        command=config.extras["command"] if command is None else command,
        shaped=shaped,
        action_mode=action_mode,
        normalize=normalize,
    )


def run_training(config, seed, shaped=True, action_mode="gains",
                 normalize=True, episodes=None, log=None):
    """Train one agent; returns (TrainResult, env)."""
    streams = rng_streams(seed)
    env = build_env(config, shaped=shaped, action_mode=action_mode,
                    normalize=normalize)
    agent = ddpg.make_agent(config.hp, env.observation_dim, env.action_dim,
                            streams["init"])
    result = ddpg.train(env, agent, config.hp, streams["noise"],
                        streams["sample"], streams["scenario"],
                        episodes=episodes, log=log)
    return result, env


def cmd_train(config, seed, out_dir, episodes=None, shaped=True,
              action_mode="gains", normalize=True, log=None):
    """Full training run with artifacts; returns the manifest entries."""
    os.makedirs(out_dir, exist_ok=True)
    start = time.monotonic()
    result, _ = run_training(config, seed, shaped=shaped,
                             action_mode=action_mode, normalize=normalize,
                             episodes=episodes, log=log)
    wall = time.monotonic() - start

    curve_path = os.path.join(out_dir, "curve.csv")
    write_csv(curve_path, CURVE_HEADER,
              [(r.episode, r.steps, r.episode_reward, r.avg_reward_30, r.sigma)
               for r in result.curve])

    weights_path = os.path.join(out_dir, "weights.txt")
    ddpg.save_agent(weights_path, result.final_agent)
    best_path = os.path.join(out_dir, "best_actor.txt")
    with open(best_path, "w") as f:
        f.write("[actor]\n")
        nn.write_mlp(f, result.best_actor)

    entries = {
        "episodes": len(result.curve),
        "best_episode": result.best_episode,
        "best_episode_reward": _fmt(result.best_episode_reward)
        if result.curve else "nan",
        "final_avg_reward_30": _fmt(result.curve[-1].avg_reward_30)
        if result.curve else "nan",
        "weights_sha256": sha256_file(weights_path),
        "wall_clock_s": f"{wall:.3f}",
        "shaped": shaped,
        "action_mode": action_mode,
        "normalize": normalize,
    }
    write_manifest(os.path.join(out_dir, "manifest.txt"), config, seed, entries)
    return entries


def cmd_baseline(config, out_path, report=None):
    """Design the LQR gain schedule over the envelope grid and serialize it."""
    env = config.envelope
    extras = config.extras
    from .airframe import AeroCoefficientsTable, PhysicalParams
    alphas = np.linspace(env.alpha_min, env.alpha_max, extras["grid_alpha"])
    machs = np.linspace(env.mach_min, env.mach_max, extras["grid_mach"])
    heights = np.linspace(env.height_min, env.height_max, extras["grid_height"])
    schedule = autopilot.design_baseline_gains(
        alphas, machs, heights, PhysicalParams(), AeroCoefficientsTable(),
        q_weight=extras["lqr_q_weight"], r_weight=extras["lqr_r_weight"],
        report=report)
    autopilot.save_schedule(out_path, schedule)
    return schedule


class _AgentPolicy:
    """Noise-free normalized-action policy from a trained actor."""

    def __init__(self, actor):
        self.actor = actor

    def __call__(self, env, obs):
        action, _ = nn.forward(self.actor, np.asarray(obs, dtype=float))
        return action


class _SchedulePolicy:
    """Gain-scheduling policy; emits the env's normalized gain action."""

    def __init__(self, schedule, hp):
        self.schedule = schedule
        self.scales = np.asarray(hp.gain_scales())

    def __call__(self, env, obs):
        s = env.state
        gains = autopilot.schedule_gains(self.schedule, s.alpha, s.mach, s.height)
        return gains.as_array() / self.scales


def load_actor_file(path):
    """Reads either a full agent bundle or a bare [actor] section."""
    with open(path) as f:
        first = f.readline().strip()
    if first == "[actor]":
        with open(path) as f:
            f.readline()
            return nn.read_mlp(f)
    return ddpg.load_agent(path).actor


def rollout(env, policy, initial=None, rng=None):
    """Deterministic episode; returns (trajectory rows, summary dict)."""
    obs = env.reset(rng=rng, initial=initial)
    alpha0, mach0, height0 = env.state.alpha, env.state.mach, env.state.height
    rows = []
    total_reward = 0.0
    diverged = False
    done = False
    while not done:
        action = policy(env, obs)
        obs, r, done, info = env.step(action)
        s = info["state"]
        g = info["gains"] or autopilot.GainSet(0.0, 0.0, 0.0, 0.0)
        rows.append((info["t"], info["a_zc"], info["a_zc_shaped"], info["a_z"],
                     s.alpha, s.q, s.theta, s.mach, s.height, s.delta,
                     s.delta_dot, info["delta_c"], g.k_dc, g.k_a, g.k_i, g.k_g,
                     r))
        total_reward += r
        diverged = diverged or info["diverged"]

    tail = max(1, round(0.5 / env.hp.ts))
    ref_col = 2 if env.shaped else 1
    errors = [abs(row[3] - row[ref_col]) for row in rows[-tail:]]
    az = [row[3] for row in rows]
    summary = {
        "alpha0": alpha0,
        "mach0": mach0,
        "height0": height0,
        "steps": len(rows),
        "diverged": diverged,
        "steady_state_error": sum(errors) / len(errors),
        "overshoot": max(az) - env.command,
        "undershoot": min(az),
        "max_delta": max(abs(row[9]) for row in rows),
        "max_delta_dot": max(abs(row[10]) for row in rows),
        "total_reward": total_reward,
    }
    return rows, summary


def cmd_eval(config, policy, scenario, n_runs, seed, out_dir):
    """Noise-free rollouts with per-run trajectory CSVs and one summary."""
    os.makedirs(out_dir, exist_ok=True)
    scenario = scenario or Scenario()
    base_seed = scenario.seed if scenario.seed is not None else seed
    summary_rows = []
    for run in range(n_runs):
        rng = np.random.default_rng(
            np.random.SeedSequence(base_seed).spawn(n_runs)[run])
        env = build_env(config, shaped=scenario.shaped,
                        action_mode=scenario.action_mode,
                        normalize=scenario.normalize,
                        command=scenario.command)
        initial = scenario.initial(rng, config.envelope)
        rows, summary = rollout(env, policy, initial=initial)
        write_csv(os.path.join(out_dir, f"run_{run:03d}.csv"),
                  TRAJECTORY_HEADER, rows)
        summary_rows.append([run] + [summary[k] for k in SUMMARY_HEADER[1:]])
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_HEADER, summary_rows)
    return summary_rows


def cmd_compare(run_dirs, out_dir, plot=True):
    """Align runs into one combined summary plus optional SVG figures."""
    os.makedirs(out_dir, exist_ok=True)
    combined = []
    curves = {}
    trajectories = {}
    for run_dir in run_dirs:
        name = os.path.basename(os.path.normpath(run_dir))
        row = {"run": name, "best_episode_reward": "", "final_avg_reward_30": "",
               "mean_steady_state_error": "", "n_eval_runs": ""}
        curve_path = os.path.join(run_dir, "curve.csv")
        if os.path.exists(curve_path):
            _, rows = read_csv(curve_path, expect_header=CURVE_HEADER)
            if rows:
                row["best_episode_reward"] = _fmt(max(r[2] for r in rows))
                row["final_avg_reward_30"] = _fmt(rows[-1][3])
            curves[name] = rows
        summary_path = os.path.join(run_dir, "summary.csv")
        if os.path.exists(summary_path):
            _, rows = read_csv(summary_path, expect_header=SUMMARY_HEADER)
            if rows:
                row["mean_steady_state_error"] = _fmt(
                    sum(r[6] for r in rows) / len(rows))
                row["n_eval_runs"] = str(len(rows))
        traj_path = os.path.join(run_dir, "run_000.csv")
        if os.path.exists(traj_path):
            _, rows = read_csv(traj_path, expect_header=TRAJECTORY_HEADER)
            trajectories[name] = rows
        combined.append(row)

    header = ["run", "best_episode_reward", "final_avg_reward_30",
              "mean_steady_state_error", "n_eval_runs"]
    with open(os.path.join(out_dir, "combined_summary.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in combined:
            writer.writerow([row[k] for k in header])

    figures = []
    if plot:
        from . import plots
        if curves:
            path = os.path.join(out_dir, "compare_curves.svg")
            plots.plot_learning_curves(curves, path)
            figures.append(path)
        if trajectories:
            path = os.path.join(out_dir, "compare_trajectories.svg")
            plots.plot_trajectories(trajectories, path)
            figures.append(path)
    return combined, figures
