"""Command-line entry point.

Subcommands: train, baseline, eval, compare. Exit codes: 0 success,
2 config error, 3 numeric divergence, 4 I/O or parse error.
"""

import argparse
import os
import sys

from . import autopilot, ddpg, harness
from .airframe import DivergenceError
from .config import ConfigError, ExperimentConfig, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _load_config(path):
    if path is None:
        return ExperimentConfig.default()
    return ExperimentConfig.load(path)


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", help="experiment config file")
    parser.add_argument("--seed", type=int, default=0, help="global seed")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flightrl",
        description="Three-loop autopilot workbench: DDPG gain learning vs "
                    "LQR gain scheduling on a nonlinear airframe.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a DDPG agent")
    _add_common(p_train)
    p_train.add_argument("--episodes", type=int, default=None,
                         help="override the configured episode count")
    p_train.add_argument("--no-shaped-command", action="store_true",
                         help="reward against the raw step command")
    p_train.add_argument("--from-scratch", action="store_true",
                         help="learn the fin command directly")
    p_train.add_argument("--no-normalization", action="store_true",
                         help="feed raw observations to the networks")
    p_train.add_argument("--quiet", action="store_true")

    p_base = sub.add_parser("baseline", help="design the LQR gain schedule")
    _add_common(p_base)

    p_eval = sub.add_parser("eval", help="run noise-free evaluation rollouts")
    _add_common(p_eval)
    group = p_eval.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights", metavar="PATH", help="trained agent file")
    group.add_argument("--schedule", metavar="PATH", help="gain schedule file")
    p_eval.add_argument("--scenario", metavar="PATH", help="scenario file")
    p_eval.add_argument("--runs", type=int, default=1)

    p_cmp = sub.add_parser("compare", help="combine runs into one report")
    p_cmp.add_argument("runs", nargs="+", metavar="RUN_DIR")
    p_cmp.add_argument("--out", metavar="DIR", default="compare")
    p_cmp.add_argument("--no-plots", action="store_true")
    return parser


def run_train(args):
    config = _load_config(args.config)
    log = None
    if not args.quiet:
        def log(row):
            if row.episode % 25 == 0 or row.episode + 1 == config.hp.max_episodes:
                print(f"episode {row.episode:4d}  steps {row.steps:3d}  "
                      f"reward {row.episode_reward:12.3f}  "
                      f"avg30 {row.avg_reward_30:12.3f}")
    entries = harness.cmd_train(
        config, args.seed, args.out, episodes=args.episodes,
        shaped=not args.no_shaped_command,
        action_mode="direct_fin" if args.from_scratch else "gains",
        normalize=not args.no_normalization,
        log=log)
    print(f"wrote {args.out}/curve.csv, weights.txt, best_actor.txt, manifest.txt")
    print(f"best episode reward: {entries['best_episode_reward']}")
    return EXIT_OK


def run_baseline(args):
    config = _load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "schedule.txt")

    def report(alpha, mach, height, gains, poles):
        pole_text = ", ".join(f"{p.real:.2f}{p.imag:+.2f}j" for p in poles)
        print(f"node alpha={alpha:+.4f} M={mach:.2f} h={height:7.0f}  "
              f"poles: {pole_text}")

    harness.cmd_baseline(config, out_path, report=report)
    print(f"wrote {out_path}")
    return EXIT_OK


def run_eval(args):
    config = _load_config(args.config)
    scenario = load_scenario(args.scenario) if args.scenario else None
    if args.weights:
        policy = harness._AgentPolicy(harness.load_actor_file(args.weights))
    else:
        schedule = autopilot.load_schedule(args.schedule)
        policy = harness._SchedulePolicy(schedule, config.hp)
    rows = harness.cmd_eval(config, policy, scenario, args.runs, args.seed,
                            args.out)
    for row in rows:
        print(f"run {int(row[0]):3d}  sse {row[6]:10.4f}  "
              f"overshoot {row[7]:10.4f}  max|fin| {row[9]:8.4f}")
    print(f"wrote {args.out}/summary.csv and {len(rows)} trajectory files")
    return EXIT_OK


def run_compare(args):
    combined, figures = harness.cmd_compare(args.runs, args.out,
                                            plot=not args.no_plots)
    for row in combined:
        print(f"{row['run']}: best episode reward {row['best_episode_reward'] or 'n/a'}, "
              f"final avg30 {row['final_avg_reward_30'] or 'n/a'}")
    print(f"wrote {args.out}/combined_summary.csv"
          + (f" and {len(figures)} figures" if figures else ""))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "train": run_train,
        "baseline": run_baseline,
        "eval": run_eval,
        "compare": run_compare,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ddpg.TrainingDiverged, DivergenceError, autopilot.DesignError,
            autopilot.TrimError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
