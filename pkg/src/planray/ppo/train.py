"""Seeded PPO training loop over the single-agent environment, plus evaluation
and a uniform-random baseline."""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import dataclass

import numpy as np
import torch

from ..env import LayoutEnv, trace_record
from ..obs import feature_dim
from ..scenario import Scenario
from .checkpoint import save_checkpoint
from .core import (
    NonFiniteLoss,
    PpoConfig,
    RolloutBatch,
    argmax_action,
    compute_gae,
    normalize_advantages,
    ppo_update,
    sample_action,
)
from .model import PolicyNetwork

METRICS_HEADER = [
    "iteration", "env_steps", "episode_reward_mean", "episode_len_mean",
    "policy_loss", "value_loss", "entropy", "approx_kl",
]


@dataclass
class TrainResult:
    metrics_path: str
    checkpoint_paths: list[str]
    final_checkpoint: str
    iterations: int
    env_steps: int
    last_reward_mean: float


def build_model(scenario: Scenario, obs_mode: str = "features", context: bool = True) -> PolicyNetwork:
    from ..env import action_space_size
    return PolicyNetwork(
        feature_dim=feature_dim(scenario.n_rooms),
        action_dim=action_space_size(scenario.grid.width, scenario.grid.height),
        obs_mode=obs_mode,
        image_hw=(scenario.grid.height, scenario.grid.width) if obs_mode == "image" else None,
        context_on=context,
    )


class _EnvStream:
    """Rollout bookkeeping for one worker environment."""

    def __init__(self, env: LayoutEnv, index: int):
        self.env = env
        self.index = index
        self.obs, _ = env.reset(seed=index)
        self.ep_return = 0.0
        self.ep_len = 0
        self.clear()

    def clear(self):
        self.layouts: list[np.ndarray] = []
        self.contexts: list[np.ndarray] = []
        self.actions: list[int] = []
        self.logps: list[float] = []
        self.rewards: list[float] = []
        self.values: list[float] = []
        self.terminateds: list[bool] = []
        self.truncateds: list[bool] = []
        self.bootstrap: list[float] = []


def _obs_tensors(streams: list[_EnvStream]) -> tuple[torch.Tensor, torch.Tensor]:
    layouts = torch.as_tensor(np.stack([s.obs.layout for s in streams]))
    contexts = torch.as_tensor(np.stack([s.obs.context for s in streams]))
    return layouts, contexts


def collect_rollout(
    model: PolicyNetwork,
    streams: list[_EnvStream],
    config: PpoConfig,
    generator: torch.Generator,
    episode_log: list[tuple[float, int]],
) -> RolloutBatch:
    """Step all workers in lockstep until rollout_steps transitions exist."""
    steps_per_env = config.rollout_steps // len(streams)
    extra = config.rollout_steps - steps_per_env * len(streams)
    for s in streams:
        s.clear()

    with torch.no_grad():
        for t in range(steps_per_env + (1 if extra else 0)):
            active = [s for s in streams if t < steps_per_env + (1 if s.index < extra else 0)]
            layouts, contexts = _obs_tensors(active)
            logits, values = model(layouts, contexts)
            for i, s in enumerate(active):
                action, logp = sample_action(logits[i], generator)
                result = s.env.step(action)
                s.layouts.append(s.obs.layout)
                s.contexts.append(s.obs.context)
                s.actions.append(action)
                s.logps.append(logp)
                s.rewards.append(result.reward)
                s.values.append(float(values[i]))
                s.terminateds.append(result.terminated)
                s.truncateds.append(result.truncated)
                s.bootstrap.append(0.0)
                s.ep_return += result.reward
                s.ep_len += 1
                s.obs = result.obs
                if result.terminated or result.truncated:
                    episode_log.append((s.ep_return, s.ep_len))
                    if result.truncated:
                        l, c = _obs_tensors([s])
                        _, v = model(l, c)
                        s.bootstrap[-1] = float(v[0])
                    s.ep_return = 0.0
                    s.ep_len = 0
                    s.obs, _ = s.env.reset(seed=s.index)

        # Bootstrap streams cut mid-episode by the rollout boundary.
        for s in streams:
            if s.rewards and not (s.terminateds[-1] or s.truncateds[-1]):
                l, c = _obs_tensors([s])
                _, v = model(l, c)
                s.truncateds[-1] = True
                s.bootstrap[-1] = float(v[0])

    adv_parts, ret_parts = [], []
    for s in streams:
        adv, ret = compute_gae(
            np.asarray(s.rewards, dtype=np.float64),
            np.asarray(s.values, dtype=np.float64),
            np.asarray(s.terminateds, dtype=bool),
            np.asarray(s.truncateds, dtype=bool),
            np.asarray(s.bootstrap, dtype=np.float64),
            config.gamma, config.lam)
        adv_parts.append(adv)
        ret_parts.append(ret)

    batch = RolloutBatch(
        layouts=np.concatenate([np.stack(s.layouts) for s in streams if s.layouts]),
        contexts=np.concatenate([np.stack(s.contexts) for s in streams if s.contexts]),
        actions=np.concatenate([np.asarray(s.actions, dtype=np.int64) for s in streams]),
        logps=np.concatenate([np.asarray(s.logps, dtype=np.float32) for s in streams]),
        rewards=np.concatenate([np.asarray(s.rewards, dtype=np.float32) for s in streams]),
        values=np.concatenate([np.asarray(s.values, dtype=np.float32) for s in streams]),
        terminateds=np.concatenate([np.asarray(s.terminateds, dtype=bool) for s in streams]),
        truncateds=np.concatenate([np.asarray(s.truncateds, dtype=bool) for s in streams]),
    )
    adv = np.concatenate(adv_parts)
    batch.returns = np.concatenate(ret_parts)
    batch.advantages = normalize_advantages(adv).astype(np.float32)
    return batch


def train(
    scenario: Scenario,
    config: PpoConfig,
    total_steps: int,
    outdir: str,
    obs_mode: str = "features",
    context: bool = True,
    progress: bool = True,
) -> TrainResult:
    """Collect/update until total_steps env transitions; write metrics + checkpoints."""
    os.makedirs(outdir, exist_ok=True)
    torch.manual_seed(config.seed)
    model = build_model(scenario, obs_mode, context)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    sample_gen = torch.Generator().manual_seed(config.seed)
    shuffle_gen = torch.Generator().manual_seed(config.seed + 1)

    streams = [
        _EnvStream(LayoutEnv(scenario, obs_mode, context), i)
        for i in range(config.workers)
    ]

    iterations = max(1, -(-total_steps // config.rollout_steps))
    metrics_path = os.path.join(outdir, "metrics.csv")
    checkpoint_paths: list[str] = []
    env_steps = 0
    reward_mean = float("nan")
    len_mean = float("nan")

    with open(metrics_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_HEADER)
        f.flush()
        try:
            for it in range(1, iterations + 1):
                episode_log: list[tuple[float, int]] = []
                batch = collect_rollout(model, streams, config, sample_gen, episode_log)
                env_steps += len(batch)
                stats = ppo_update(model, optimizer, batch, config, shuffle_gen)
                if episode_log:
                    reward_mean = float(np.mean([r for r, _ in episode_log]))
                    len_mean = float(np.mean([l for _, l in episode_log]))
                row = [it, env_steps, f"{reward_mean:.6f}", f"{len_mean:.6f}",
                       f"{stats['policy_loss']:.6f}", f"{stats['value_loss']:.6f}",
                       f"{stats['entropy']:.6f}", f"{stats['approx_kl']:.6f}"]
                writer.writerow(row)
                f.flush()
                if progress:
                    print(f"iter {it}/{iterations} steps={env_steps} "
                          f"reward_mean={reward_mean:.2f} len_mean={len_mean:.2f} "
                          f"entropy={stats['entropy']:.3f}", file=sys.stderr)
                if config.checkpoint_every and it % config.checkpoint_every == 0 and it < iterations:
                    path = os.path.join(outdir, f"ckpt_iter_{it:04d}.ckpt")
                    save_checkpoint(path, model, scenario, config,
                                    meta={"iteration": it, "env_steps": env_steps})
                    checkpoint_paths.append(path)
        except NonFiniteLoss:
            # Keep whatever metrics were flushed, then re-raise for the caller.
            raise

    final_path = os.path.join(outdir, "ckpt_final.ckpt")
    save_checkpoint(final_path, model, scenario, config,
                    meta={"iteration": iterations, "env_steps": env_steps})
    checkpoint_paths.append(final_path)
    return TrainResult(metrics_path, checkpoint_paths, final_path,
                       iterations, env_steps, reward_mean)


def _summary(returns: list[float], lengths: list[int], missed: list[int | None]) -> dict:
    hist: dict[str, int] = {}
    for m in missed:
        key = "incomplete" if m is None else str(m)
        hist[key] = hist.get(key, 0) + 1
    return {
        "episodes": len(returns),
        "reward_mean": float(np.mean(returns)),
        "reward_min": float(np.min(returns)),
        "reward_max": float(np.max(returns)),
        "len_mean": float(np.mean(lengths)),
        "missed_hist": dict(sorted(hist.items())),
    }


def evaluate(
    model: PolicyNetwork,
    scenario: Scenario,
    episodes: int,
    seed: int,
    mode: str = "argmax",
    obs_mode: str = "features",
    context: bool = True,
    trace_dir: str | None = None,
) -> dict:
    """Run argmax (default) or sampled episodes; returns the metrics summary."""
    env = LayoutEnv(scenario, obs_mode, context)
    generator = torch.Generator().manual_seed(seed)
    returns: list[float] = []
    lengths: list[int] = []
    missed: list[int | None] = []
    if trace_dir:
        os.makedirs(trace_dir, exist_ok=True)
    with torch.no_grad():
        for ep in range(episodes):
            obs, _ = env.reset(seed=seed + ep)
            ep_ret, ep_len, ep_missed = 0.0, 0, None
            trace: list[dict] = []
            while True:
                layout = torch.as_tensor(obs.layout).unsqueeze(0)
                ctx = torch.as_tensor(obs.context).unsqueeze(0)
                logits, _ = model(layout, ctx)
                if mode == "sample":
                    action, _ = sample_action(logits[0], generator)
                else:
                    action, _ = argmax_action(logits[0])
                result = env.step(action)
                ep_ret += result.reward
                ep_len += 1
                if trace_dir:
                    trace.append(trace_record(ep_len - 1, action, result))
                obs = result.obs
                if result.terminated:
                    ep_missed = int(result.info.get("missed_adjacencies", 0))
                    break
                if result.truncated:
                    break
            returns.append(ep_ret)
            lengths.append(ep_len)
            missed.append(ep_missed)
            if trace_dir:
                with open(os.path.join(trace_dir, f"episode_{ep:03d}.jsonl"), "w") as tf:
                    for rec in trace:
                        tf.write(json.dumps(rec) + "\n")
    return _summary(returns, lengths, missed)


def random_baseline(scenario: Scenario, episodes: int, seed: int,
                    obs_mode: str = "features", context: bool = True) -> dict:
    """Uniform-random policy over the full action space."""
    env = LayoutEnv(scenario, obs_mode, context)
    rng = np.random.default_rng(seed)
    n_actions = env.action_count
    returns, lengths, missed = [], [], []
    for ep in range(episodes):
        env.reset(seed=seed + ep)
        ep_ret, ep_len, ep_missed = 0.0, 0, None
        while True:
            result = env.step(int(rng.integers(0, n_actions)))
            ep_ret += result.reward
            ep_len += 1
            if result.terminated:
                ep_missed = int(result.info.get("missed_adjacencies", 0))
                break
            if result.truncated:
                break
        returns.append(ep_ret)
        lengths.append(ep_len)
        missed.append(ep_missed)
    return _summary(returns, lengths, missed)
