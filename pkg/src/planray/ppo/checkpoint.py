"""Checkpoint container: one JSON header line, then raw float32 weight blocks.

The header records the format version, a config echo, the scenario, the
observation setup, the action-codec version and the ordered layer shapes; the
binary section is the little-endian float32 weights concatenated in exactly
that order.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import torch

from ..obs import feature_dim
from ..scenario import Scenario, scenario_from_dict, scenario_to_dict
from .core import PpoConfig
from .model import PolicyNetwork

FORMAT_VERSION = 1
ACTION_CODEC_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    path: str,
    model: PolicyNetwork,
    scenario: Scenario,
    config: PpoConfig,
    meta: dict | None = None,
) -> None:
    layers = [
        {"name": name, "shape": list(shape)} for name, shape in model.layer_order()
    ]
    header = {
        "version": FORMAT_VERSION,
        "action_codec_version": ACTION_CODEC_VERSION,
        "config": dataclasses.asdict(config),
        "scenario": scenario_to_dict(scenario),
        "obs_mode": model.obs_mode,
        "context_on": model.context_on,
        "action_space": model.action_dim,
        "layers": layers,
    }
    if meta:
        header["meta"] = meta
    state = model.state_dict()
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8"))
        f.write(b"\n")
        for layer in layers:
            block = state[layer["name"]].detach().cpu().numpy().astype("<f4")
            f.write(block.tobytes())


def load_checkpoint(path: str) -> tuple[PolicyNetwork, Scenario, PpoConfig, dict]:
    with open(path, "rb") as f:
        header_line = f.readline()
        blob = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"bad checkpoint header: {e}")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
    if header.get("action_codec_version") != ACTION_CODEC_VERSION:
        raise CheckpointError("action codec version mismatch")

    scenario = scenario_from_dict(header["scenario"])
    config = PpoConfig(**header["config"])
    obs_mode = header["obs_mode"]
    model = PolicyNetwork(
        feature_dim=feature_dim(scenario.n_rooms),
        action_dim=header["action_space"],
        obs_mode=obs_mode,
        image_hw=(scenario.grid.height, scenario.grid.width) if obs_mode == "image" else None,
        context_on=header["context_on"],
    )
    expected = model.layer_order()
    got = [(l["name"], tuple(l["shape"])) for l in header["layers"]]
    if expected != got:
        raise CheckpointError("layer shapes in checkpoint do not match the model")

    offset = 0
    state = {}
    for name, shape in expected:
        n = int(np.prod(shape)) if shape else 1
        chunk = blob[offset:offset + 4 * n]
        if len(chunk) != 4 * n:
            raise CheckpointError("checkpoint truncated")
        arr = np.frombuffer(chunk, dtype="<f4").reshape(shape).copy()
        state[name] = torch.from_numpy(arr)
        offset += 4 * n
    if offset != len(blob):
        raise CheckpointError("trailing bytes after weight blocks")
    model.load_state_dict(state)
    return model, scenario, config, header.get("meta", {})
