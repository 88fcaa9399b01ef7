"""Wall library, placement, ray propagation with cutting, and room bookkeeping.

A wall is a 3-cell hard base (anchor plus one cell in each of its two
directions) from which two soft rays extend cell by cell.  A ray stops at the
grid edge, a masked cell, any hard cell, or a soft cell whose wall has an
infiltration rate >= the new wall's.  A soft cell with a strictly lower rate
is captured: it transfers to the new wall and the victim's ray is truncated,
freeing every cell strictly beyond the captured one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .grid import (
    FREE,
    MASKED,
    WALL_HARD,
    WALL_SOFT,
    Coord,
    GridSpec,
    LayoutGrid,
    Region,
    free_regions,
    new_grid,
)

N = (0, 1)
S = (0, -1)
E = (1, 0)
W = (-1, 0)

# Shape id -> ordered direction pair (d1, d2).  Straight walls have opposite
# directions, angled walls perpendicular ones.
SHAPES: tuple[tuple[Coord, Coord], ...] = (
    (W, E),  # 0 horizontal
    (S, N),  # 1 vertical
    (N, E),  # 2
    (N, W),  # 3
    (S, E),  # 4
    (S, W),  # 5
)
N_SHAPES = len(SHAPES)
SHAPE_BY_DIRSET = {frozenset(pair): i for i, pair in enumerate(SHAPES)}

# Placement violation codes.
OUT_OF_BOUNDS = "out_of_bounds"
COLLIDES_WALL = "collides_wall"
COLLIDES_MASK = "collides_mask"

# Partition rejection codes.
ROOM_DESTROYED = "room_destroyed"
NO_SPLIT = "no_split"


@dataclass(frozen=True)
class WallSpec:
    """A wall's intent: id (placement order, 1-based), shape, anchor, rate."""

    wall_id: int
    shape: int
    anchor: Coord
    infiltration: int

    def __post_init__(self):
        if not 0 <= self.shape < N_SHAPES:
            raise ValueError(f"shape {self.shape} not in [0, {N_SHAPES})")
        if not 0 <= self.infiltration <= 9:
            raise ValueError(f"infiltration {self.infiltration} not in [0, 9]")


@dataclass(frozen=True)
class PlacedWall:
    """Realized geometry: hard base cells plus the two soft rays.

    Rays are in march order (away from the base).  The five keypoints are the
    anchor, the two radiation points (outer base cells) and the two endpoints
    (last ray cell, or the radiation point when the ray is empty).
    """

    spec: WallSpec
    base_cells: tuple[Coord, Coord, Coord]  # (anchor, anchor+d1, anchor+d2)
    ray1: tuple[Coord, ...]
    ray2: tuple[Coord, ...]

    @property
    def radiation_points(self) -> tuple[Coord, Coord]:
        return (self.base_cells[1], self.base_cells[2])

    @property
    def endpoints(self) -> tuple[Coord, Coord]:
        r1, r2 = self.radiation_points
        return (self.ray1[-1] if self.ray1 else r1, self.ray2[-1] if self.ray2 else r2)

    @property
    def keypoints(self) -> tuple[Coord, Coord, Coord, Coord, Coord]:
        rad = self.radiation_points
        end = self.endpoints
        return (self.base_cells[0], rad[0], rad[1], end[0], end[1])

    @property
    def cells(self) -> tuple[Coord, ...]:
        return self.base_cells + self.ray1 + self.ray2


@dataclass(frozen=True)
class CutEvent:
    """One ray capture: the victim had strictly lower infiltration."""

    victim: int
    ray_index: int  # which of the victim's rays was cut (0 or 1)
    freed: tuple[Coord, ...]
    captured: tuple[Coord, ...]


@dataclass(frozen=True)
class PlacementOutcome:
    grid: LayoutGrid
    walls: dict[int, PlacedWall]  # all walls after the placement, by id
    placed: PlacedWall
    cuts: tuple[CutEvent, ...]


class ResimulateFailed(Exception):
    def __init__(self, index: int, reason: str):
        super().__init__(f"wall {index} placement invalid: {reason}")
        self.index = index
        self.reason = reason


def base_cells(spec: WallSpec) -> tuple[Coord, Coord, Coord]:
    (ax, ay) = spec.anchor
    d1, d2 = SHAPES[spec.shape]
    return ((ax, ay), (ax + d1[0], ay + d1[1]), (ax + d2[0], ay + d2[1]))


def validate_placement(grid: LayoutGrid, spec: WallSpec) -> str | None:
    """None when all three base cells are in bounds and free, else a code."""
    for (x, y) in base_cells(spec):
        if not grid.in_bounds(x, y):
            return OUT_OF_BOUNDS
        k = grid.kind_at(x, y)
        if k == MASKED:
            return COLLIDES_MASK
        if k in (WALL_HARD, WALL_SOFT):
            return COLLIDES_WALL
    return None


def place_wall(
    grid: LayoutGrid, spec: WallSpec, walls: Mapping[int, PlacedWall]
) -> PlacementOutcome:
    """Place a validated wall, marching both rays and applying any cuts.

    The input grid and wall map are not modified.
    """
    g = grid.copy()
    new_walls = dict(walls)
    wid = spec.wall_id
    base = base_cells(spec)
    for (x, y) in base:
        g.set_cell(x, y, WALL_HARD, wid)

    cuts: list[CutEvent] = []
    rays: list[tuple[Coord, ...]] = []
    for ray_index, d in enumerate(SHAPES[spec.shape]):
        cells: list[Coord] = []
        x = spec.anchor[0] + 2 * d[0]
        y = spec.anchor[1] + 2 * d[1]
        while g.in_bounds(x, y):
            k = g.kind_at(x, y)
            if k == FREE:
                g.set_cell(x, y, WALL_SOFT, wid)
                cells.append((x, y))
            elif k == WALL_SOFT:
                victim_id = g.owner_at(x, y)
                victim = new_walls[victim_id]
                if victim.spec.infiltration >= spec.infiltration:
                    break
                # Capture: the cell transfers; the victim ray loses everything
                # from the captured cell onward, cells beyond it revert to free.
                g.set_cell(x, y, WALL_SOFT, wid)
                cells.append((x, y))
                vray_index = 0 if (x, y) in victim.ray1 else 1
                vray = victim.ray1 if vray_index == 0 else victim.ray2
                idx = vray.index((x, y))
                freed = vray[idx + 1:]
                for (fx, fy) in freed:
                    g.set_cell(fx, fy, FREE, 0)
                if vray_index == 0:
                    new_walls[victim_id] = replace(victim, ray1=vray[:idx])
                else:
                    new_walls[victim_id] = replace(victim, ray2=vray[:idx])
                cuts.append(CutEvent(victim_id, vray_index, freed, ((x, y),)))
            else:  # MASKED or WALL_HARD
                break
            x += d[0]
            y += d[1]
        rays.append(tuple(cells))

    placed = PlacedWall(spec, base, rays[0], rays[1])
    new_walls[wid] = placed
    return PlacementOutcome(g, new_walls, placed, tuple(cuts))


def resimulate(
    grid_spec: GridSpec, specs: list[WallSpec] | tuple[WallSpec, ...]
) -> tuple[LayoutGrid, dict[int, PlacedWall]]:
    """Replay placements in order; equals folding place_wall over the list."""
    grid = new_grid(grid_spec)
    walls: dict[int, PlacedWall] = {}
    for i, spec in enumerate(specs, start=1):
        reason = validate_placement(grid, spec)
        if reason is not None:
            raise ResimulateFailed(i, reason)
        outcome = place_wall(grid, spec, walls)
        grid, walls = outcome.grid, outcome.walls
    return grid, walls


@dataclass(frozen=True)
class RoomMap:
    """Room labels assigned so far plus the unlabeled residual region."""

    labels: tuple[tuple[int, Region], ...] = ()
    residual: Region | None = None

    @staticmethod
    def initial(grid: LayoutGrid) -> "RoomMap":
        regions = free_regions(grid)
        if len(regions) != 1:
            raise ValueError(f"initial free space must be one region, got {len(regions)}")
        return RoomMap(labels=(), residual=regions[0])

    def label_map(self) -> dict[int, Region]:
        return dict(self.labels)

    def with_room(self, room_id: int, region: Region, residual: Region | None) -> "RoomMap":
        return RoomMap(self.labels + ((room_id, region),), residual)

    def finalize(self, room_id: int) -> "RoomMap":
        """Promote the residual to the final room."""
        assert self.residual is not None
        return RoomMap(self.labels + ((room_id, self.residual),), None)


@dataclass(frozen=True)
class PartitionReject:
    reason: str  # ROOM_DESTROYED or NO_SPLIT


def room_partition(
    grid: LayoutGrid,
    prev: RoomMap,
    new_wall_id: int,
    target_area: int | None = None,
) -> RoomMap | PartitionReject:
    """Re-derive room labels after wall `new_wall_id` was placed.

    Every previously labeled room must reappear unchanged (a placement that
    merges, shrinks, grows or splits an accepted room is rejected); the old
    residual must have split into exactly two regions.  The new room is the
    leftover region closest to `target_area` when one is given (ties: smaller
    area, then smallest cell), otherwise the smaller leftover (ties: smallest
    cell).  The other leftover becomes the new residual.
    """
    regions = free_regions(grid)
    claimed: set[int] = set()
    new_labels: list[tuple[int, Region]] = []
    for room_id, old_region in prev.labels:
        best_i = -1
        best_key = None
        for i, reg in enumerate(regions):
            ov = len(old_region.cells & reg.cells)
            if ov == 0:
                continue
            key = (-ov, reg.first_cell[1], reg.first_cell[0])
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        if best_i < 0 or best_i in claimed:
            return PartitionReject(ROOM_DESTROYED)
        if regions[best_i].cells != old_region.cells:
            return PartitionReject(ROOM_DESTROYED)
        claimed.add(best_i)
        new_labels.append((room_id, regions[best_i]))

    leftovers = [reg for i, reg in enumerate(regions) if i not in claimed]
    if len(leftovers) != 2:
        return PartitionReject(NO_SPLIT)

    if target_area is None:
        key = lambda r: (r.area, r.first_cell[1], r.first_cell[0])
    else:
        key = lambda r: (abs(r.area - target_area), r.area, r.first_cell[1], r.first_cell[0])
    leftovers.sort(key=key)
    new_room, residual = leftovers[0], leftovers[1]
    return RoomMap(tuple(new_labels) + ((new_wall_id, new_room),), residual)


def room_metrics(region: Region) -> tuple[int, float]:
    """(area in cells, bounding-box aspect ratio >= 1)."""
    minx, miny, maxx, maxy = region.bbox
    bw = maxx - minx + 1
    bh = maxy - miny + 1
    return region.area, max(bw, bh) / min(bw, bh)


def adjacency_matrix(grid: LayoutGrid, rooms: Mapping[int, Region]) -> np.ndarray:
    """Symmetric n x n binary matrix, n = highest room id present.

    Rooms i and j are adjacent iff some wall cell (hard or soft) has at least
    one 4-neighbor in room i and one in room j.
    """
    n = max(rooms.keys(), default=0)
    mat = np.zeros((n, n), dtype=np.int8)
    if len(rooms) < 2:
        return mat
    label = np.zeros((grid.height, grid.width), dtype=np.int32)
    for rid, region in rooms.items():
        for (x, y) in region.cells:
            label[y, x] = rid
    wall_mask = (grid.kind == WALL_HARD) | (grid.kind == WALL_SOFT)
    ys, xs = np.nonzero(wall_mask)
    for x, y in zip(xs.tolist(), ys.tolist()):
        near = set()
        for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
            if 0 <= nx < grid.width and 0 <= ny < grid.height and label[ny, nx] > 0:
                near.add(int(label[ny, nx]))
        if len(near) > 1:
            ids = sorted(near)
            for a in range(len(ids)):
                for b in range(a + 1, len(ids)):
                    mat[ids[a] - 1, ids[b] - 1] = 1
                    mat[ids[b] - 1, ids[a] - 1] = 1
    return mat
