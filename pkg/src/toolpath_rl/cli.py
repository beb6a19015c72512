"""Command-line interface: train, eval, baseline, gen-sections."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import TrainConfig, load_config
from .sections import generate_dataset, load_directory, save_dataset


def _cmd_train(args) -> int:
    overrides = {}
    if args.algo:
        overrides["algorithm"] = args.algo
    if args.reward:
        overrides["reward_mode"] = args.reward
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        config = load_config(args.config, **overrides)
    else:
        config = TrainConfig(**overrides)
    record = harness.train(config, out_dir=args.out, log=lambda m: print(m, flush=True))
    print(f"best mean score: {record.best_mean_score:.3f}")
    return 0


def _cmd_eval(args) -> int:
    policy, config = harness.greedy_policy_from_checkpoint(args.checkpoint)
    dataset = load_directory(args.sections)
    mean, std, mean_len = harness.evaluate(
        policy, dataset, args.episodes, np.random.default_rng(args.seed),
        config.reward_mode, config.horizon, harness.obs_config_of(config),
    )
    print(f"episodes: {args.episodes}")
    print(f"mean_score: {mean:.4f}")
    print(f"score_std: {std:.4f}")
    print(f"mean_ep_len: {mean_len:.2f}")
    return 0


def _cmd_baseline(args) -> int:
    if args.strategy != "zigzag":
        print(f"unknown baseline strategy {args.strategy!r}", file=sys.stderr)
        return 2
    dataset = load_directory(args.sections)
    scores = harness.zigzag_scores(
        dataset, args.episodes, np.random.default_rng(args.seed), args.horizon
    )
    print(f"episodes: {args.episodes}")
    print(f"mean_score: {np.mean(scores):.4f}")
    print(f"score_std: {np.std(scores):.4f}")
    return 0


def _cmd_gen_sections(args) -> int:
    rng = np.random.default_rng(args.seed)
    dataset = generate_dataset(rng, args.count, args.size)
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} sections to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toolpath-rl",
        description="RL toolpath design workbench for pixel-grid deposition sections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an agent")
    p.add_argument("--algo", choices=["dqn", "ppo", "sac"])
    p.add_argument("--reward", choices=["dense", "sparse"])
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True, help="run output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--sections", type=Path, required=True, help=".sect directory")
    p.add_argument("--episodes", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("baseline", help="run an engineered baseline policy")
    p.add_argument("--strategy", default="zigzag")
    p.add_argument("--sections", type=Path, required=True)
    p.add_argument("--episodes", type=int, default=16)
    p.add_argument("--horizon", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("gen-sections", help="write procedurally generated .sect files")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_gen_sections)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
