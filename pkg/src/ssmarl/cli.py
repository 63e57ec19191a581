"""Command-line harness.

  ssmarl train        run a training experiment, one metrics CSV per seed
  ssmarl verify       sweep the analytical-bound checkers on random MMDPs
  ssmarl bench        time a few episodes of a configuration
  ssmarl dump-config  print (or save) a config JSON to start editing from

`train` starts either from --config FILE or from the per-environment
defaults selected by --env/--algorithm; --override key=value flags patch
individual fields last, e.g. --override hyper.actor_lr=3e-4.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .config import (ALGORITHMS, ENVS, ConfigError, apply_overrides,
                     default_config, load_config, save_config, to_dict)
from .experiment import build_env, build_trainer, run_experiment
from .metrics import read_metrics
from .verification import format_report, run_verification_sweep, write_report


def _add_config_args(p):
    p.add_argument("--config", help="config JSON to start from")
    p.add_argument("--env", choices=ENVS, help="environment name")
    p.add_argument("--algorithm", choices=ALGORITHMS,
                   help="training scheme")
    p.add_argument("--override", action="append", default=[],
                   metavar="KEY=VALUE",
                   help="patch one config field (repeatable)")


def _resolve_config(args, needs_episodes=True):
    if args.config:
        config = load_config(args.config)
        if args.env or args.algorithm:
            data = to_dict(config)
            data["env"] = args.env or config.env
            data["algorithm"] = args.algorithm or config.algorithm
            from .config import from_dict
            config = from_dict(data)
    else:
        env = args.env or "predation"
        algorithm = args.algorithm or "ss"
        config = default_config(env, algorithm)
    overrides = list(args.override)
    if getattr(args, "episodes", None) is not None:
        overrides.append(f"episodes={args.episodes}")
    if getattr(args, "seeds", None):
        seeds = json.dumps([int(s) for s in args.seeds.split(",")])
        overrides.append(f"seeds={seeds}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seeds=[{int(args.seed)}]")
    if getattr(args, "out", None):
        overrides.append(f"out_dir={args.out}")
    return apply_overrides(config, overrides)


def cmd_train(args) -> int:
    config = _resolve_config(args)
    manifest = run_experiment(config, jobs=args.jobs)
    print(f"run complete: {config.algorithm} on {config.env}, "
          f"{config.episodes} episodes x {len(config.seeds)} seeds "
          f"({manifest['elapsed_seconds']:.1f}s)")
    finals = []
    for seed in config.seeds:
        path = f"{config.out_dir}/{manifest['files'][str(seed)]}"
        data = read_metrics(path)
        finals.append(data["normalized_return"][-1])
        print(f"  seed {seed}: {path}  "
              f"final normalized_return={finals[-1]:.4f}")
    print(f"mean final normalized_return: {float(np.mean(finals)):.4f}")
    return 0


def cmd_verify(args) -> int:
    report = run_verification_sweep(n_instances=args.instances,
                                    seed=args.seed)
    print(format_report(report))
    if args.out:
        write_report(report, args.out)
        print(f"report written to {args.out}")
    return 0 if report["all_passed"] else 1


def cmd_bench(args) -> int:
    config = _resolve_config(args)
    env = build_env(config)
    trainer = build_trainer(config, env, int(config.seeds[0]))
    start = time.perf_counter()
    for ep in range(args.episodes):
        trainer.run_episode(ep)
    elapsed = time.perf_counter() - start
    print(f"{config.algorithm} on {config.env}: "
          f"{args.episodes} episodes in {elapsed:.2f}s "
          f"({elapsed / args.episodes:.3f}s/episode)")
    return 0


def cmd_dump_config(args) -> int:
    config = _resolve_config(args, needs_episodes=False)
    if args.out:
        save_config(config, args.out)
        print(f"config written to {args.out}")
    else:
        print(json.dumps(to_dict(config), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssmarl",
        description="Suggestion-sharing multi-agent RL laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration")
    _add_config_args(p)
    p.add_argument("--episodes", type=int, help="episodes per seed")
    p.add_argument("--seed", type=int, help="single seed shortcut")
    p.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes across seeds")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("verify",
                       help="numerically check the analytical bounds")
    p.add_argument("--instances", type=int, default=1000,
                   help="random instances per sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="time a few episodes")
    _add_config_args(p)
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--seed", type=int, help="single seed shortcut")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("dump-config", help="print a config JSON")
    _add_config_args(p)
    p.add_argument("--out", help="write instead of print")
    p.set_defaults(fn=cmd_dump_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
