"""Policy network: layout feature encoder + design-context encoder + actor-critic.

The layout branch is a two-layer tanh MLP (width 256) over the feature vector,
or two stride-2 convolutions (16 and 32 channels, 3x3) plus a linear layer for
the RGB raster mode.  The context branch has two tanh encoders of width 64,
one over the 2*N_MAX area entries and one over the 2*C(N_MAX,2) adjacency
flags.  Their concatenation feeds a width-256 fusion layer with an actor head
over all actions and a scalar critic head.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from ..obs import CONTEXT_DIM
from ..scenario import N_MAX_ROOMS

_AREA_DIM = 2 * N_MAX_ROOMS
_ADJ_DIM = CONTEXT_DIM - _AREA_DIM


def _ortho(layer: nn.Linear | nn.Conv2d, gain: float) -> None:
    nn.init.orthogonal_(layer.weight, gain=gain)
    nn.init.zeros_(layer.bias)


class PolicyNetwork(nn.Module):
    def __init__(
        self,
        feature_dim: int,
        action_dim: int,
        obs_mode: str = "features",
        image_hw: tuple[int, int] | None = None,
        context_on: bool = True,
        hidden: int = 256,
        context_hidden: int = 64,
    ):
        super().__init__()
        self.obs_mode = obs_mode
        self.context_on = context_on
        self.action_dim = action_dim
        self.hidden = hidden
        self.context_hidden = context_hidden

        if obs_mode == "features":
            self.feat1 = nn.Linear(feature_dim, hidden)
            self.feat2 = nn.Linear(hidden, hidden)
            _ortho(self.feat1, math.sqrt(2))
            _ortho(self.feat2, math.sqrt(2))
        elif obs_mode == "image":
            assert image_hw is not None
            self.conv1 = nn.Conv2d(3, 16, 3, stride=2, padding=1)
            self.conv2 = nn.Conv2d(16, 32, 3, stride=2, padding=1)
            h = (image_hw[0] + 1) // 2
            h = (h + 1) // 2
            w = (image_hw[1] + 1) // 2
            w = (w + 1) // 2
            self.conv_out = 32 * h * w
            self.feat2 = nn.Linear(self.conv_out, hidden)
            _ortho(self.conv1, math.sqrt(2))
            _ortho(self.conv2, math.sqrt(2))
            _ortho(self.feat2, math.sqrt(2))
        else:
            raise ValueError(f"unknown obs mode {obs_mode!r}")

        self.ctx_area = nn.Linear(_AREA_DIM, context_hidden)
        self.ctx_adj = nn.Linear(_ADJ_DIM, context_hidden)
        _ortho(self.ctx_area, math.sqrt(2))
        _ortho(self.ctx_adj, math.sqrt(2))

        self.fusion = nn.Linear(hidden + 2 * context_hidden, hidden)
        self.actor = nn.Linear(hidden, action_dim)
        self.critic = nn.Linear(hidden, 1)
        _ortho(self.fusion, math.sqrt(2))
        # Near-uniform initial policy: the action space is large.
        _ortho(self.actor, 0.01)
        _ortho(self.critic, 1.0)

    def forward(self, layout: torch.Tensor, context: torch.Tensor | None) -> tuple[torch.Tensor, torch.Tensor]:
        """(logits over actions, value); batch-first inputs."""
        if self.obs_mode == "features":
            h = torch.tanh(self.feat1(layout))
            h = torch.tanh(self.feat2(h))
        else:
            x = layout
            if x.dim() == 3:
                x = x.unsqueeze(0)
            x = x.permute(0, 3, 1, 2).float() / 255.0
            x = torch.tanh(self.conv1(x))
            x = torch.tanh(self.conv2(x))
            h = torch.tanh(self.feat2(x.flatten(1)))

        batch = h.shape[0]
        if self.context_on and context is not None and context.numel() > 0:
            areas = context[..., :_AREA_DIM]
            adj = context[..., _AREA_DIM:]
            c = torch.cat([torch.tanh(self.ctx_area(areas)), torch.tanh(self.ctx_adj(adj))], dim=-1)
        else:
            c = torch.zeros(batch, 2 * self.context_hidden, dtype=h.dtype, device=h.device)
        z = torch.tanh(self.fusion(torch.cat([h, c], dim=-1)))
        logits = self.actor(z)
        value = self.critic(z).squeeze(-1)
        return logits, value

    def layer_order(self) -> list[tuple[str, tuple[int, ...]]]:
        """Documented serialization order of weight blocks."""
        return [(name, tuple(p.shape)) for name, p in self.state_dict().items()]
