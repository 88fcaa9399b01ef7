"""One-shot single-agent MDP: action codec, constraint-rejection stepping,
terminal adjacency reward.

An action encodes (anchor cell, wall shape, infiltration rate).  A step either
commits a wall that creates a constraint-satisfying room (reward 0, or the
terminal adjacency reward R - M on the final wall) or is rejected: the agent
gets -1 and the state is reverted bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .grid import LayoutGrid, hash_hex, layout_hash, new_grid
from .obs import Observation, build_observation
from .scenario import Scenario, ValidationError, validate_scenario
from .walls import (
    N_SHAPES,
    PartitionReject,
    PlacedWall,
    RoomMap,
    WallSpec,
    adjacency_matrix,
    place_wall,
    room_metrics,
    room_partition,
    validate_placement,
)

N_INFILTRATION = 10
ACTIONS_PER_CELL = N_SHAPES * N_INFILTRATION  # 60

# Room-evaluation failure codes.
AREA_BELOW_MINIMUM = "area_below_minimum"
AREA_THRESHOLD = "area_threshold"
PROPORTION = "proportion"

EPISODE_OVER = "episode_over"


class EpisodeOver(RuntimeError):
    """step() called after termination or truncation."""


class ActionOutOfRange(ValueError):
    pass


def action_space_size(width: int, height: int) -> int:
    return width * height * ACTIONS_PER_CELL


def decode_action(action: int, width: int, height: int) -> tuple[tuple[int, int], int, int]:
    """action -> (anchor, shape, infiltration); cell-major, then shape, then rate."""
    if not 0 <= action < action_space_size(width, height):
        raise ActionOutOfRange(
            f"action {action} not in [0, {action_space_size(width, height)})")
    cell, rest = divmod(action, ACTIONS_PER_CELL)
    shape, infiltration = divmod(rest, N_INFILTRATION)
    y, x = divmod(cell, width)
    return (x, y), shape, infiltration


def encode_action(anchor: tuple[int, int], shape: int, infiltration: int, width: int) -> int:
    x, y = anchor
    return (y * width + x) * ACTIONS_PER_CELL + shape * N_INFILTRATION + infiltration


def evaluate_room(area: int, proportion: float, room_id: int, scenario: Scenario) -> str | None:
    """None when the room satisfies its constraints, else a failure code."""
    if area < scenario.a_min:
        return AREA_BELOW_MINIMUM
    if abs(area - scenario.area_for(room_id)) > scenario.a_th:
        return AREA_THRESHOLD
    if scenario.proportion_enabled and proportion > scenario.p_star:
        return PROPORTION
    return None


def terminal_reward(achieved: np.ndarray, scenario: Scenario) -> float:
    """R minus the number of desired adjacencies absent from `achieved`."""
    missed = sum(
        1 for (i, j) in scenario.desired_adjacencies if not achieved[i - 1, j - 1]
    )
    return scenario.reward_R - missed


@dataclass
class StepResult:
    obs: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict[str, Any]


class LayoutEnv:
    """Deterministic episodic environment over one scenario."""

    def __init__(self, scenario: Scenario, obs_mode: str = "features", context: bool = True):
        errors = validate_scenario(scenario)
        if errors:
            raise ValidationError(errors)
        self.scenario = scenario
        self.obs_mode = obs_mode
        self.context_on = context
        self._grid: LayoutGrid | None = None
        self._walls: dict[int, PlacedWall] = {}
        self._rooms: RoomMap | None = None
        self._steps = 0
        self._rejected = 0
        self._done = True
        self._seed: int | None = None
        self._obs: Observation | None = None

    # -- protocol-facing descriptors -------------------------------------
    @property
    def action_count(self) -> int:
        return action_space_size(self.scenario.grid.width, self.scenario.grid.height)

    def obs_dims(self) -> dict[str, Any]:
        obs = self._obs if self._obs is not None else self._build_obs_fresh()
        return {
            "layout": list(obs.layout.shape),
            "context": list(obs.context.shape),
            "mode": self.obs_mode,
        }

    # -- episode API ------------------------------------------------------
    def reset(self, seed: int | None = None) -> tuple[Observation, dict[str, Any]]:
        self._seed = seed
        self._grid = new_grid(self.scenario.grid)
        self._walls = {}
        self._rooms = RoomMap.initial(self._grid)
        self._steps = 0
        self._rejected = 0
        self._done = False
        self._obs = self._build_obs()
        info = {"hash": hash_hex(self._grid), "rooms_so_far": 0, "seed": seed}
        return self._obs, info

    def step(self, action: int) -> StepResult:
        if self._done or self._grid is None:
            raise EpisodeOver("episode is over; call reset()")
        anchor, shape, infiltration = decode_action(
            int(action), self._grid.width, self._grid.height)
        k = len(self._walls) + 1
        spec = WallSpec(wall_id=k, shape=shape, anchor=anchor, infiltration=infiltration)

        reason = validate_placement(self._grid, spec)
        if reason is not None:
            return self._reject(reason)

        outcome = place_wall(self._grid, spec, self._walls)
        part = room_partition(outcome.grid, self._rooms, k,
                              target_area=self.scenario.area_for(k))
        if isinstance(part, PartitionReject):
            return self._reject(part.reason)

        area, proportion = room_metrics(part.label_map()[k])
        fail = evaluate_room(area, proportion, k, self.scenario)
        if fail is not None:
            return self._reject(fail, failed_room=k)

        final = k == self.scenario.n_walls
        if final:
            r_area, r_prop = room_metrics(part.residual)
            fail = evaluate_room(r_area, r_prop, self.scenario.n_rooms, self.scenario)
            if fail is not None:
                return self._reject(fail, failed_room=self.scenario.n_rooms)

        # Commit.
        self._grid = outcome.grid
        self._walls = outcome.walls
        self._steps += 1
        info: dict[str, Any] = {"accepted": True}
        if final:
            self._rooms = part.finalize(self.scenario.n_rooms)
            achieved = adjacency_matrix(self._grid, self._rooms.label_map())
            reward = terminal_reward(achieved, self.scenario)
            missed = int(self.scenario.reward_R - reward)
            self._done = True
            terminated, truncated = True, False
            info["missed_adjacencies"] = missed
        else:
            self._rooms = part
            reward = 0.0
            terminated = False
            truncated = self._steps >= self.scenario.max_steps
            if truncated:
                self._done = True
        self._obs = self._build_obs()
        info["rooms_so_far"] = len(self._rooms.labels)
        info["hash"] = hash_hex(self._grid)
        return StepResult(self._obs, float(reward), terminated, truncated, info)

    def _reject(self, reason: str, failed_room: int | None = None) -> StepResult:
        self._steps += 1
        self._rejected += 1
        truncated = self._steps >= self.scenario.max_steps
        if truncated:
            self._done = True
        info: dict[str, Any] = {
            "accepted": False,
            "reject_reason": reason,
            "rooms_so_far": len(self._rooms.labels),
            "hash": hash_hex(self._grid),
        }
        if failed_room is not None:
            info["failed_room"] = failed_room
        return StepResult(self._obs, -1.0, False, truncated, info)

    # -- inspection --------------------------------------------------------
    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def rejected_count(self) -> int:
        return self._rejected

    @property
    def done(self) -> bool:
        return self._done

    @property
    def grid(self) -> LayoutGrid:
        assert self._grid is not None
        return self._grid

    @property
    def walls(self) -> list[PlacedWall]:
        return [self._walls[k] for k in sorted(self._walls)]

    @property
    def rooms(self) -> RoomMap:
        assert self._rooms is not None
        return self._rooms

    def current_hash(self) -> int:
        assert self._grid is not None
        return layout_hash(self._grid)

    def observation(self) -> Observation:
        assert self._obs is not None
        return self._obs

    def _build_obs(self) -> Observation:
        return build_observation(
            self.scenario, self._grid, self.walls, self._rooms,
            self.obs_mode, self.context_on)

    def _build_obs_fresh(self) -> Observation:
        grid = new_grid(self.scenario.grid)
        return build_observation(
            self.scenario, grid, [], RoomMap.initial(grid), self.obs_mode, self.context_on)


def trace_record(t: int, action: int, result: StepResult) -> dict[str, Any]:
    """One JSON-lines episode-trace record."""
    rec = {
        "t": t,
        "action": int(action),
        "accepted": bool(result.info.get("accepted", False)),
        "reason": result.info.get("reject_reason"),
        "reward": result.reward,
        "hash": result.info.get("hash"),
    }
    return rec
