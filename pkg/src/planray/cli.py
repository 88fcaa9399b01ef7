"""Operator command line: train, eval, baseline, render, serve, golden."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .env import LayoutEnv, trace_record
from .scenario import ValidationError, get_scenario, validate_scenario
from .serve import serve_stdio

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_TRAINING = 4


def _resolve_scenario(name_or_path: str):
    try:
        scenario = get_scenario(name_or_path)
    except (KeyError, ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(EXIT_SCENARIO)
    errors = validate_scenario(scenario)
    if errors:
        print(f"error: scenario {scenario.name!r} invalid: {'; '.join(errors)}",
              file=sys.stderr)
        raise SystemExit(EXIT_SCENARIO)
    return scenario


def cmd_train(args: argparse.Namespace) -> int:
    from .ppo import NonFiniteLoss, PpoConfig, train

    scenario = _resolve_scenario(args.scenario)
    config = PpoConfig(seed=args.seed, workers=args.workers,
                       checkpoint_every=args.checkpoint_every)
    try:
        result = train(scenario, config, args.total_steps, args.outdir,
                       obs_mode=args.obs, context=args.context == "on",
                       progress=not args.quiet)
    except NonFiniteLoss as e:
        print(f"error: training aborted: {e}", file=sys.stderr)
        return EXIT_TRAINING
    print(json.dumps({
        "metrics": result.metrics_path,
        "checkpoint": result.final_checkpoint,
        "iterations": result.iterations,
        "env_steps": result.env_steps,
    }))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from .ppo import CheckpointError, evaluate, load_checkpoint

    try:
        model, scenario, _, _ = load_checkpoint(args.checkpoint)
    except (OSError, CheckpointError) as e:
        print(f"error: cannot load checkpoint: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    summary = evaluate(model, scenario, args.episodes, args.seed, mode=args.mode,
                       obs_mode=model.obs_mode, context=model.context_on,
                       trace_dir=args.render_dir)
    if args.render_dir:
        _render_traces(scenario, args.render_dir)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    from .ppo import random_baseline

    scenario = _resolve_scenario(args.scenario)
    summary = random_baseline(scenario, args.episodes, args.seed)
    print(json.dumps(summary))
    return EXIT_OK


def _render_traces(scenario, trace_dir: str) -> None:
    from .render import render_env

    for name in sorted(os.listdir(trace_dir)):
        if not name.endswith(".jsonl"):
            continue
        env = LayoutEnv(scenario)
        env.reset()
        with open(os.path.join(trace_dir, name)) as f:
            for line in f:
                rec = json.loads(line)
                if env.done:
                    break
                env.step(rec["action"])
        render_env(env, os.path.join(trace_dir, name[:-6] + ".png"))


def cmd_render(args: argparse.Namespace) -> int:
    from .render import RenderStyle, render_env

    scenario = _resolve_scenario(args.scenario)
    env = LayoutEnv(scenario)
    env.reset()
    try:
        with open(args.trace) as f:
            for line in f:
                rec = json.loads(line)
                if env.done:
                    break
                env.step(rec["action"])
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    render_env(env, args.out, RenderStyle(cell_px=args.cell_px))
    print(json.dumps({"out": args.out}))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    if not args.stdio:
        print("error: only --stdio serving is supported", file=sys.stderr)
        return EXIT_USAGE
    scenario = _resolve_scenario(args.scenario)
    return serve_stdio(scenario, obs_mode=args.obs, context=args.context == "on")


def cmd_golden(args: argparse.Namespace) -> int:
    """In-process random episodes with full step records, for parity testing."""
    scenario = _resolve_scenario(args.scenario)
    env = LayoutEnv(scenario)
    rng = np.random.default_rng(args.seed)
    out = sys.stdout
    for ep in range(args.episodes):
        obs, info = env.reset(seed=args.seed + ep)
        out.write(json.dumps({
            "episode": ep, "event": "reset", "seed": args.seed + ep,
            "obs": {"features": obs.layout.astype(float).tolist(),
                    "context": obs.context.astype(float).tolist()},
            "hash": info["hash"],
        }) + "\n")
        t = 0
        while not env.done and t < args.max_episode_steps:
            action = int(rng.integers(0, env.action_count))
            result = env.step(action)
            rec = trace_record(t, action, result)
            rec.update({
                "episode": ep, "event": "step",
                "obs": {"features": result.obs.layout.astype(float).tolist(),
                        "context": result.obs.context.astype(float).tolist()},
                "terminated": result.terminated,
                "truncated": result.truncated,
            })
            out.write(json.dumps(rec) + "\n")
            t += 1
    out.flush()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planray")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a PPO policy on a scenario")
    p.add_argument("--scenario", required=True, help="built-in name or .scenario.json path")
    p.add_argument("--total-steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.add_argument("--obs", choices=("features", "image"), default="features")
    p.add_argument("--context", choices=("on", "off"), default="on")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--checkpoint-every", type=int, default=10)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("argmax", "sample"), default="argmax")
    p.add_argument("--render-dir", default=None,
                   help="write per-episode traces and renders here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run a uniform-random policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("render", help="render a traced episode to PNG")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace", required=True, help="episode trace (.jsonl)")
    p.add_argument("--out", required=True)
    p.add_argument("--cell-px", type=int, default=24)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="serve one environment over stdio")
    p.add_argument("--stdio", action="store_true")
    p.add_argument("--scenario", default="scenario1")
    p.add_argument("--obs", choices=("features", "image"), default="features")
    p.add_argument("--context", choices=("on", "off"), default="on")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("golden", help="print full in-process episode records (parity oracle)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--max-episode-steps", type=int, default=10_000)
    p.set_defaults(func=cmd_golden)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
