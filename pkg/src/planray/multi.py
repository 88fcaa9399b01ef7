"""Dynamic multi-agent environment: each wall is an agent transforming itself.

Every transform rewrites one wall's spec, then the whole layout is re-simulated
in the fixed placement order (order sensitivity is intentional).  Only
geometric invalidity rejects a transform; constraint violations are allowed so
agents can move through bad states.  The episode terminates when every owned
region plus the residual satisfies its constraints and no desired adjacency is
missing, at which point all agents receive R.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Any

import numpy as np

from .env import StepResult, evaluate_room, terminal_reward
from .grid import LayoutGrid, Region, free_regions, hash_hex, new_grid
from .obs import Observation, build_observation
from .scenario import Scenario, ValidationError, validate_scenario
from .walls import (
    N_SHAPES,
    SHAPE_BY_DIRSET,
    SHAPES,
    PlacedWall,
    ResimulateFailed,
    RoomMap,
    WallSpec,
    adjacency_matrix,
    place_wall,
    resimulate,
    room_metrics,
    validate_placement,
)

N_AGENT_ACTIONS = 22

ILLEGAL_SHAPE = "illegal_shape"
RESIMULATE_FAILED = "resimulate_failed"

# Direction maps for +90 (counterclockwise) and -90 (clockwise) rotations.
_CCW = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
_CW = {v: k for k, v in _CCW.items()}
_FLIP_H = {(1, 0): (-1, 0), (-1, 0): (1, 0), (0, 1): (0, 1), (0, -1): (0, -1)}
_FLIP_V = {(1, 0): (1, 0), (-1, 0): (-1, 0), (0, 1): (0, -1), (0, -1): (0, 1)}


class IllegalShape(ValueError):
    """A segment rotation would leave both segments pointing the same way."""


class WrongTurn(RuntimeError):
    pass


class InitFailure(RuntimeError):
    pass


def _shape_of(d1, d2) -> int:
    key = frozenset((d1, d2))
    if key not in SHAPE_BY_DIRSET:
        raise IllegalShape(f"direction pair {d1}/{d2} is not a wall shape")
    return SHAPE_BY_DIRSET[key]


def apply_transform(spec: WallSpec, action: int) -> WallSpec:
    """Pure spec rewrite for one of the 22 agent actions.

    0/1 rotate base -90/+90; 2/3 rotate segment 1 -90/+90; 4/5 segment 2;
    6..9 move left/right/up/down; 10/11 flip horizontally/vertically;
    12..21 set infiltration 0..9.
    """
    if not 0 <= action < N_AGENT_ACTIONS:
        raise ValueError(f"agent action {action} not in [0, {N_AGENT_ACTIONS})")
    d1, d2 = SHAPES[spec.shape]
    if action in (0, 1):
        rot = _CW if action == 0 else _CCW
        return replace(spec, shape=_shape_of(rot[d1], rot[d2]))
    if action in (2, 3, 4, 5):
        rot = _CW if action in (2, 4) else _CCW
        if action in (2, 3):
            d1 = rot[d1]
        else:
            d2 = rot[d2]
        if d1 == d2:
            raise IllegalShape("segments collapsed onto one direction")
        return replace(spec, shape=_shape_of(d1, d2))
    if action in (6, 7, 8, 9):
        dx, dy = ((-1, 0), (1, 0), (0, 1), (0, -1))[action - 6]
        return replace(spec, anchor=(spec.anchor[0] + dx, spec.anchor[1] + dy))
    if action == 10:
        return replace(spec, shape=_shape_of(_FLIP_H[d1], _FLIP_H[d2]))
    if action == 11:
        return replace(spec, shape=_shape_of(_FLIP_V[d1], _FLIP_V[d2]))
    return replace(spec, infiltration=action - 12)


def ownership(grid: LayoutGrid, walls: list[PlacedWall]) -> tuple[dict[int, Region | None], list[Region]]:
    """Assign each wall its owned region on the final grid.

    Walls claim in placement order: the smallest unclaimed free region
    (ties: smallest cell) 4-adjacent to any of the wall's cells, skipped when
    none exists or the candidate is larger than the complementary free area.
    Returns (owned regions by wall id, unclaimed leftovers).
    """
    regions = free_regions(grid)
    total_free = sum(r.area for r in regions)
    cell_region: dict[tuple[int, int], int] = {}
    for i, reg in enumerate(regions):
        for c in reg.cells:
            cell_region[c] = i
    unclaimed = set(range(len(regions)))
    owned: dict[int, Region | None] = {}
    for wall in walls:
        adjacent: set[int] = set()
        for (x, y) in wall.cells:
            for nb in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                i = cell_region.get(nb)
                if i is not None and i in unclaimed:
                    adjacent.add(i)
        pick: int | None = None
        if adjacent:
            pick = min(adjacent, key=lambda i: (
                regions[i].area, regions[i].first_cell[1], regions[i].first_cell[0]))
            if regions[pick].area > total_free - regions[pick].area:
                pick = None
        if pick is None:
            owned[wall.spec.wall_id] = None
        else:
            owned[wall.spec.wall_id] = regions[pick]
            unclaimed.discard(pick)
    leftovers = [regions[i] for i in sorted(unclaimed)]
    return owned, leftovers


class MultiLayoutEnv:
    """Turn-based environment; agent ids are wall ids 1..n_rooms-1."""

    def __init__(self, scenario: Scenario, obs_mode: str = "features", context: bool = True,
                 init_attempts: int = 10_000):
        errors = validate_scenario(scenario)
        if errors:
            raise ValidationError(errors)
        self.scenario = scenario
        self.obs_mode = obs_mode
        self.context_on = context
        self.init_attempts = init_attempts
        self.n_agents = scenario.n_walls
        self._specs: list[WallSpec] = []
        self._grid: LayoutGrid | None = None
        self._walls: dict[int, PlacedWall] = {}
        self._owned: dict[int, Region | None] = {}
        self._leftovers: list[Region] = []
        self._steps = 0
        self._done = True

    @property
    def turn(self) -> int:
        """Agent expected to act now (1-based)."""
        return (self._steps % self.n_agents) + 1

    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def done(self) -> bool:
        return self._done

    @property
    def specs(self) -> list[WallSpec]:
        return list(self._specs)

    @property
    def grid(self) -> LayoutGrid:
        assert self._grid is not None
        return self._grid

    def owned_regions(self) -> dict[int, Region | None]:
        return dict(self._owned)

    def reset(self, seed: int | None = None) -> tuple[dict[int, Observation], dict[str, Any]]:
        """Place n_rooms-1 walls at uniformly random valid specs, in agent order."""
        rng = np.random.default_rng(seed)
        W, H = self.scenario.grid.width, self.scenario.grid.height
        grid = new_grid(self.scenario.grid)
        walls: dict[int, PlacedWall] = {}
        specs: list[WallSpec] = []
        for wall_id in range(1, self.n_agents + 1):
            placed = False
            for _ in range(self.init_attempts):
                spec = WallSpec(
                    wall_id=wall_id,
                    shape=int(rng.integers(0, N_SHAPES)),
                    anchor=(int(rng.integers(0, W)), int(rng.integers(0, H))),
                    infiltration=int(rng.integers(0, 10)),
                )
                if validate_placement(grid, spec) is None:
                    outcome = place_wall(grid, spec, walls)
                    grid, walls = outcome.grid, outcome.walls
                    specs.append(spec)
                    placed = True
                    break
            if not placed:
                raise InitFailure(f"could not place wall {wall_id} "
                                  f"after {self.init_attempts} samples")
        self._specs = specs
        self._grid = grid
        self._walls = walls
        self._owned, self._leftovers = ownership(grid, self._ordered_walls())
        self._steps = 0
        self._done = False
        obs = self._build_obs()
        info = {"hash": hash_hex(grid), "turn": self.turn}
        return {aid: obs for aid in range(1, self.n_agents + 1)}, info

    def step(self, agent_id: int, action: int) -> dict[int, StepResult]:
        if self._done or self._grid is None:
            raise RuntimeError("episode is over; call reset()")
        if agent_id != self.turn:
            raise WrongTurn(f"agent {agent_id} acted on agent {self.turn}'s turn")

        reject_reason: str | None = None
        new_specs = list(self._specs)
        try:
            new_specs[agent_id - 1] = apply_transform(self._specs[agent_id - 1], action)
        except IllegalShape:
            reject_reason = ILLEGAL_SHAPE

        if reject_reason is None:
            try:
                grid, walls = resimulate(self.scenario.grid, new_specs)
            except ResimulateFailed as e:
                reject_reason = f"{RESIMULATE_FAILED}:{e.reason}"

        self._steps += 1
        truncated = self._steps >= self.scenario.max_steps
        if truncated:
            self._done = True

        if reject_reason is not None:
            obs = self._build_obs()
            return self._results(obs, actor=agent_id, actor_reward=-1.0,
                                 terminated=False, truncated=truncated,
                                 info={"accepted": False, "reject_reason": reject_reason,
                                       "turn": self.turn, "hash": hash_hex(self._grid)})

        self._specs = new_specs
        self._grid = grid
        self._walls = walls
        self._owned, self._leftovers = ownership(grid, self._ordered_walls())

        terminated, missed = self._check_terminal()
        if terminated:
            self._done = True
            reward = self.scenario.reward_R - missed  # missed == 0 here
            obs = self._build_obs()
            results = self._results(obs, actor=agent_id, actor_reward=reward,
                                    terminated=True, truncated=False,
                                    info={"accepted": True, "turn": self.turn,
                                          "missed_adjacencies": missed,
                                          "hash": hash_hex(self._grid)})
            for res in results.values():
                res.reward = reward
            return results
        obs = self._build_obs()
        return self._results(obs, actor=agent_id, actor_reward=0.0,
                             terminated=False, truncated=truncated,
                             info={"accepted": True, "turn": self.turn,
                                   "hash": hash_hex(self._grid)})

    # -- internals --------------------------------------------------------
    def _ordered_walls(self) -> list[PlacedWall]:
        return [self._walls[s.wall_id] for s in self._specs]

    def _room_map(self) -> RoomMap | None:
        """Rooms 1..n when every agent owns a region and one leftover remains."""
        if any(self._owned.get(i) is None for i in range(1, self.n_agents + 1)):
            return None
        if len(self._leftovers) != 1:
            return None
        labels = tuple((i, self._owned[i]) for i in range(1, self.n_agents + 1))
        return RoomMap(labels + ((self.scenario.n_rooms, self._leftovers[0]),), None)

    def _check_terminal(self) -> tuple[bool, int]:
        rooms = self._room_map()
        if rooms is None:
            return False, 0
        for rid, region in rooms.labels:
            area, prop = room_metrics(region)
            if evaluate_room(area, prop, rid, self.scenario) is not None:
                return False, 0
        achieved = adjacency_matrix(self._grid, rooms.label_map())
        missed = int(self.scenario.reward_R - terminal_reward(achieved, self.scenario))
        if missed != 0:
            return False, 0
        return True, 0

    def _build_obs(self) -> Observation:
        labels = tuple(
            (i, r) for i, r in sorted(self._owned.items()) if r is not None)
        rooms = RoomMap(labels, self._leftovers[0] if len(self._leftovers) == 1 else None)
        return build_observation(
            self.scenario, self._grid, self._ordered_walls(), rooms,
            self.obs_mode, self.context_on)

    def _results(self, obs, actor, actor_reward, terminated, truncated, info) -> dict[int, StepResult]:
        out = {}
        for aid in range(1, self.n_agents + 1):
            reward = actor_reward if aid == actor else 0.0
            agent_info = dict(info)
            agent_info["actor"] = actor
            out[aid] = StepResult(obs, reward, terminated, truncated, agent_info)
        return out


def trace_record(t: int, agent_id: int, action: int, result: StepResult) -> dict[str, Any]:
    """Episode-trace record; same fields as the single-agent trace plus agent_id."""
    return {
        "t": t,
        "agent_id": agent_id,
        "action": int(action),
        "accepted": bool(result.info.get("accepted", False)),
        "reason": result.info.get("reject_reason"),
        "reward": result.reward,
        "hash": result.info.get("hash"),
    }
