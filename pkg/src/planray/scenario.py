"""Design contexts: room counts, target areas, adjacency goals, constants.

Scenario files are UTF-8 JSON objects (extension ``.scenario.json``) with keys
exactly: name, grid{width,height,masked:[[x,y],...]}, n_rooms, desired_areas,
proportion_enabled, p_star, a_min, a_th, desired_adjacencies:[[i,j],...],
reward_R, max_steps.  One cell corresponds to one square meter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .grid import GridSpec, InvalidSpec, free_regions, new_grid

# Upper bound on rooms per scenario; context vectors are padded to this size.
N_MAX_ROOMS = 10


class ParseError(ValueError):
    def __init__(self, context: str, message: str = ""):
        super().__init__(f"{context}: {message}" if message else context)
        self.context = context


class ValidationError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: GridSpec
    n_rooms: int
    desired_areas: tuple[int, ...]
    proportion_enabled: bool
    desired_adjacencies: frozenset[tuple[int, int]]
    reward_R: float
    p_star: float = 5.0
    a_min: int = 10
    a_th: int = 4
    max_steps: int = 200

    def area_for(self, room_id: int) -> int:
        """Desired area of room `room_id` (1-based, positional binding)."""
        return self.desired_areas[room_id - 1]

    @property
    def n_walls(self) -> int:
        return self.n_rooms - 1


def _adj(pairs) -> frozenset[tuple[int, int]]:
    return frozenset((min(i, j), max(i, j)) for i, j in pairs)


def builtin_scenarios() -> list[Scenario]:
    """The six 20x20 test scenarios, verbatim constants."""
    grid = GridSpec(20, 20)
    rows = [
        (1, True, [110, 92, 57, 52], [[1, 2], [2, 3], [2, 4], [1, 3]]),
        (2, True, [83, 78, 60, 44, 33], [[1, 2], [1, 5], [3, 4]]),
        (3, False, [111, 75, 38, 34, 30, 21], [[3, 4], [1, 6], [1, 4]]),
        (4, True, [65, 60, 48, 36, 30, 28, 23], [[2, 3], [1, 5], [6, 7], [3, 4]]),
        (5, False, [85, 64, 64, 50, 41, 32, 32, 28], [[2, 8], [4, 6], [1, 7], [2, 7]]),
        (6, False, [63, 60, 58, 50, 34, 33, 27, 27, 26],
         [[3, 9], [8, 9], [3, 6], [7, 8], [5, 7], [1, 8]]),
    ]
    out = []
    for num, prop, areas, adj in rows:
        out.append(Scenario(
            name=f"scenario{num}",
            grid=grid,
            n_rooms=len(areas),
            desired_areas=tuple(areas),
            proportion_enabled=prop,
            desired_adjacencies=_adj(adj),
            reward_R=400.0 if prop else 200.0,
        ))
    return out


def mini3_scenario() -> Scenario:
    """Small 10x10 three-room scenario used by the scaled training runs."""
    return Scenario(
        name="mini3",
        grid=GridSpec(10, 10),
        n_rooms=3,
        desired_areas=(40, 30, 20),
        proportion_enabled=False,
        desired_adjacencies=_adj([[1, 2]]),
        reward_R=200.0,
    )


def named_scenarios() -> dict[str, Scenario]:
    out = {s.name: s for s in builtin_scenarios()}
    m = mini3_scenario()
    out[m.name] = m
    return out


def get_scenario(name_or_path: str) -> Scenario:
    """Resolve a built-in name or load a ``.scenario.json`` file."""
    named = named_scenarios()
    if name_or_path in named:
        return named[name_or_path]
    import os
    if os.path.exists(name_or_path):
        return load_scenario(name_or_path)
    raise KeyError(
        f"unknown scenario {name_or_path!r}; built-ins: {', '.join(sorted(named))}"
    )


def validate_scenario(s: Scenario) -> list[str]:
    """All invariant violations, empty when the scenario is usable."""
    errors: list[str] = []
    try:
        grid = new_grid(s.grid)
    except InvalidSpec as e:
        return [f"InvalidGrid({e})"]
    if len(free_regions(grid)) != 1:
        errors.append("DisconnectedFreeSpace(masking splits the plan)")
    if s.n_rooms < 2:
        errors.append(f"TooFewRooms({s.n_rooms} < 2)")
    if s.n_rooms > N_MAX_ROOMS:
        errors.append(f"TooManyRooms({s.n_rooms} > {N_MAX_ROOMS})")
    if len(s.desired_areas) != s.n_rooms:
        errors.append(
            f"AreaCountMismatch({len(s.desired_areas)} areas for {s.n_rooms} rooms)")
    if s.a_th < 0:
        errors.append(f"NegativeAreaThreshold({s.a_th})")
    if s.p_star < 1:
        errors.append(f"ProportionBelowOne({s.p_star})")
    for i, a in enumerate(s.desired_areas, start=1):
        if a < s.a_min:
            errors.append(f"AreaBelowMinimum(room {i}: {a} < {s.a_min})")
    for (i, j) in sorted(s.desired_adjacencies):
        if i == j:
            errors.append(f"AdjacencySelfPair(({i}, {j}))")
        if not (1 <= i <= s.n_rooms and 1 <= j <= s.n_rooms):
            errors.append(f"AdjacencyIdOutOfRange(({i}, {j}) with {s.n_rooms} rooms)")
    # Feasibility: rooms may undershoot targets by a_th; each wall needs at
    # least its 3 base cells.
    need = sum(max(s.a_min, a - s.a_th) for a in s.desired_areas) + 3 * (s.n_rooms - 1)
    if need > s.grid.free_count:
        errors.append(f"AreasExceedPlan({need} > {s.grid.free_count} free cells)")
    if s.reward_R <= len(s.desired_adjacencies):
        errors.append(
            f"RewardTooSmall(R={s.reward_R} <= {len(s.desired_adjacencies)} adjacencies)")
    if s.max_steps < s.n_rooms - 1:
        errors.append(f"MaxStepsTooSmall({s.max_steps} < {s.n_rooms - 1})")
    return errors


_KEYS = (
    "name", "grid", "n_rooms", "desired_areas", "proportion_enabled",
    "p_star", "a_min", "a_th", "desired_adjacencies", "reward_R", "max_steps",
)


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "grid": {
            "width": s.grid.width,
            "height": s.grid.height,
            "masked": sorted([list(c) for c in s.grid.masked]),
        },
        "n_rooms": s.n_rooms,
        "desired_areas": list(s.desired_areas),
        "proportion_enabled": s.proportion_enabled,
        "p_star": s.p_star,
        "a_min": s.a_min,
        "a_th": s.a_th,
        "desired_adjacencies": sorted([list(p) for p in s.desired_adjacencies]),
        "reward_R": s.reward_R,
        "max_steps": s.max_steps,
    }


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ParseError("document", "expected a JSON object")
    for key in _KEYS:
        if key not in data:
            raise ParseError(key, "missing key")
    g = data["grid"]
    for key in ("width", "height", "masked"):
        if key not in g:
            raise ParseError(f"grid.{key}", "missing key")
    try:
        masked = frozenset((int(x), int(y)) for x, y in g["masked"])
        s = Scenario(
            name=str(data["name"]),
            grid=GridSpec(int(g["width"]), int(g["height"]), masked),
            n_rooms=int(data["n_rooms"]),
            desired_areas=tuple(int(a) for a in data["desired_areas"]),
            proportion_enabled=bool(data["proportion_enabled"]),
            p_star=float(data["p_star"]),
            a_min=int(data["a_min"]),
            a_th=int(data["a_th"]),
            desired_adjacencies=_adj((int(i), int(j)) for i, j in data["desired_adjacencies"]),
            reward_R=float(data["reward_R"]),
            max_steps=int(data["max_steps"]),
        )
    except (TypeError, ValueError) as e:
        raise ParseError("document", str(e))
    errors = validate_scenario(s)
    if errors:
        raise ValidationError(errors)
    return s


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(path, f"invalid JSON at line {e.lineno}: {e.msg}")
    return scenario_from_dict(data)


def save_scenario(s: Scenario, path: str) -> None:
    errors = validate_scenario(s)
    if errors:
        raise ValidationError(errors)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(s), f, indent=2, sort_keys=False)
        f.write("\n")
