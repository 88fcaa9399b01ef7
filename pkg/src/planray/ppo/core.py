"""PPO pieces: config, GAE, categorical sampling, the clipped-surrogate update."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import torch

from .model import PolicyNetwork


@dataclass
class PpoConfig:
    gamma: float = 0.99
    lam: float = 1.0
    clip: float = 0.3
    lr: float = 5e-5
    rollout_steps: int = 4000
    minibatch: int = 128
    epochs: int = 30
    vf_coeff: float = 1.0
    ent_coeff: float = 0.01
    grad_clip: float = 40.0
    seed: int = 0
    workers: int = 4
    checkpoint_every: int = 10


class NonFiniteLoss(RuntimeError):
    def __init__(self, epoch: int, minibatch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, minibatch {minibatch}")
        self.epoch = epoch
        self.minibatch = minibatch


@dataclass
class RolloutBatch:
    """Aligned trajectory arrays; advantages normalized per batch."""

    layouts: np.ndarray
    contexts: np.ndarray
    actions: np.ndarray
    logps: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    terminateds: np.ndarray
    truncateds: np.ndarray
    advantages: np.ndarray = field(default=None)  # type: ignore[assignment]
    returns: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.actions)


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    terminateds: np.ndarray,
    truncateds: np.ndarray,
    bootstrap: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over one stream of steps.

    delta_t = r_t + gamma*V(s_{t+1}) - V(s_t), accumulated with factor
    gamma*lam and reset at episode ends.  V(s_{t+1}) is the next stored value
    within an episode, 0 at termination, and `bootstrap[t]` at truncation
    (which includes a rollout boundary cutting an episode short).
    Returns (advantages, returns) with returns = advantages + values.
    """
    n = len(rewards)
    adv = np.zeros(n, dtype=np.float64)
    gae = 0.0
    for t in range(n - 1, -1, -1):
        if terminateds[t]:
            next_value = 0.0
            gae = 0.0
        elif truncateds[t]:
            next_value = float(bootstrap[t])
            gae = 0.0
        else:
            next_value = float(values[t + 1])
        delta = float(rewards[t]) + gamma * next_value - float(values[t])
        gae = delta + gamma * lam * gae * (0.0 if (terminateds[t] or truncateds[t]) else 1.0)
        adv[t] = gae
    returns = adv + values.astype(np.float64)
    return adv.astype(np.float32), returns.astype(np.float32)


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    var = float(adv.var())
    if var < 1e-8:
        return adv - adv.mean()
    return (adv - adv.mean()) / np.sqrt(var)


def sample_action(logits: torch.Tensor, generator: torch.Generator) -> tuple[int, float]:
    """Categorical sample via softmax; returns (action, log-probability)."""
    logp = torch.log_softmax(logits, dim=-1)
    probs = torch.exp(logp)
    action = int(torch.multinomial(probs, 1, generator=generator).item())
    return action, float(logp[action])


def argmax_action(logits: torch.Tensor) -> tuple[int, float]:
    logp = torch.log_softmax(logits, dim=-1)
    action = int(torch.argmax(logits).item())
    return action, float(logp[action])


def ppo_loss(
    model: PolicyNetwork,
    layouts: torch.Tensor,
    contexts: torch.Tensor,
    actions: torch.Tensor,
    old_logps: torch.Tensor,
    advantages: torch.Tensor,
    returns: torch.Tensor,
    config: PpoConfig,
) -> tuple[torch.Tensor, dict[str, float]]:
    """Negative PPO objective (to minimize) and per-minibatch stats."""
    logits, values = model(layouts, contexts)
    logp_all = torch.log_softmax(logits, dim=-1)
    logps = logp_all.gather(1, actions.unsqueeze(1)).squeeze(1)
    ratio = torch.exp(logps - old_logps)
    clipped = torch.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip)
    surrogate = torch.min(ratio * advantages, clipped * advantages)
    policy_loss = -surrogate.mean()
    value_loss = ((values - returns) ** 2).mean()
    entropy = -(torch.exp(logp_all) * logp_all).sum(dim=-1).mean()
    loss = policy_loss + config.vf_coeff * value_loss - config.ent_coeff * entropy
    stats = {
        "policy_loss": float(policy_loss.detach()),
        "value_loss": float(value_loss.detach()),
        "entropy": float(entropy.detach()),
        "approx_kl": float((old_logps - logps.detach()).mean()),
    }
    return loss, stats


def minibatch_indices(
    n: int, minibatch: int, epochs: int, generator: torch.Generator
) -> Iterator[tuple[int, int, np.ndarray]]:
    for epoch in range(epochs):
        perm = torch.randperm(n, generator=generator).numpy()
        for mb, start in enumerate(range(0, n, minibatch)):
            yield epoch, mb, perm[start:start + minibatch]


def ppo_update(
    model: PolicyNetwork,
    optimizer: torch.optim.Optimizer,
    batch: RolloutBatch,
    config: PpoConfig,
    generator: torch.Generator,
) -> dict[str, float]:
    """Epochs of clipped-surrogate minibatch steps; deterministic per generator."""
    layouts = torch.as_tensor(batch.layouts)
    contexts = torch.as_tensor(batch.contexts)
    actions = torch.as_tensor(batch.actions, dtype=torch.long)
    old_logps = torch.as_tensor(batch.logps)
    advantages = torch.as_tensor(batch.advantages)
    returns = torch.as_tensor(batch.returns)

    totals: dict[str, float] = {"policy_loss": 0.0, "value_loss": 0.0,
                                "entropy": 0.0, "approx_kl": 0.0}
    count = 0
    for epoch, mb, idx in minibatch_indices(len(batch), config.minibatch,
                                            config.epochs, generator):
        ix = torch.as_tensor(idx, dtype=torch.long)
        loss, stats = ppo_loss(
            model, layouts[ix], contexts[ix], actions[ix], old_logps[ix],
            advantages[ix], returns[ix], config)
        if not torch.isfinite(loss):
            raise NonFiniteLoss(epoch, mb)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        optimizer.step()
        for k in totals:
            totals[k] += stats[k]
        count += 1
    return {k: v / max(count, 1) for k, v in totals.items()}
