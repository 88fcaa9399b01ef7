"""Observation builders: layout feature vector, RGB raster, context vector.

Feature vector layout (all values in [0, 1]): one 30-entry slot per wall, in
placement order, padded with zeros up to n_rooms-1 slots.  A slot holds the
five keypoints as (x, y) pairs normalized by (W-1, H-1) in the order anchor,
radiation 1, radiation 2, endpoint 1, endpoint 2, followed by the Euclidean
distance of each keypoint to the four outline corners (0,0), (W-1,0), (0,H-1),
(W-1,H-1), normalized by the grid diagonal.  After the slots come 25
keypoint-to-keypoint distances for every wall pair (i < j), same order and
normalization, zero while either wall is missing.

Context vector layout: desired areas / F and current areas / F (F = initial
free cell count), each padded to N_MAX_ROOMS entries, then desired and current
adjacency flags over the upper triangle of an N_MAX_ROOMS x N_MAX_ROOMS matrix
in row-major order (1,2), (1,3), ..., (2,3), ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FREE, MASKED, WALL_HARD, LayoutGrid
from .scenario import N_MAX_ROOMS, Scenario
from .walls import PlacedWall, RoomMap, adjacency_matrix

# Ten maximally distinct wall/room hues; wall k uses PALETTE[(k-1) % 10].
# Hard cells use the full color, soft cells a 50% blend with white.
PALETTE: tuple[tuple[int, int, int], ...] = (
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
)

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)

_PAIR_COUNT = N_MAX_ROOMS * (N_MAX_ROOMS - 1) // 2
CONTEXT_DIM = 2 * N_MAX_ROOMS + 2 * _PAIR_COUNT


@dataclass(frozen=True)
class Observation:
    """Layout encoding (feature vector or RGB raster) plus design context."""

    layout: np.ndarray
    context: np.ndarray

    def equals(self, other: "Observation") -> bool:
        return (
            self.layout.shape == other.layout.shape
            and self.context.shape == other.context.shape
            and np.array_equal(self.layout, other.layout)
            and np.array_equal(self.context, other.context)
        )


def feature_dim(n_rooms: int) -> int:
    m = n_rooms - 1
    return 30 * m + 25 * (m * (m - 1) // 2)


def wall_soft_color(k: int) -> tuple[int, int, int]:
    r, g, b = PALETTE[(k - 1) % len(PALETTE)]
    return ((r + 255) // 2, (g + 255) // 2, (b + 255) // 2)


def observe_features(walls: list[PlacedWall], width: int, height: int, n_rooms: int) -> np.ndarray:
    m = n_rooms - 1
    out = np.zeros(feature_dim(n_rooms), dtype=np.float32)
    diag = math.hypot(width - 1, height - 1)
    corners = ((0, 0), (width - 1, 0), (0, height - 1), (width - 1, height - 1))
    kps: list[tuple] = []
    for wall in walls:
        kps.append(wall.keypoints)

    for i, points in enumerate(kps):
        base = 30 * i
        for j, (x, y) in enumerate(points):
            out[base + 2 * j] = x / (width - 1)
            out[base + 2 * j + 1] = y / (height - 1)
        for j, (x, y) in enumerate(points):
            for c, (cx, cy) in enumerate(corners):
                out[base + 10 + 4 * j + c] = math.hypot(x - cx, y - cy) / diag

    pair_base = 30 * m
    pair = 0
    for i in range(m):
        for j in range(i + 1, m):
            if i < len(kps) and j < len(kps):
                off = pair_base + 25 * pair
                for a, (ax, ay) in enumerate(kps[i]):
                    for b, (bx, by) in enumerate(kps[j]):
                        out[off + 5 * a + b] = math.hypot(ax - bx, ay - by) / diag
            pair += 1
    return out


def upper_pairs(n: int = N_MAX_ROOMS) -> list[tuple[int, int]]:
    """1-based (i, j) pairs with i < j, row-major."""
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


_PAIRS = upper_pairs()


def observe_context(scenario: Scenario, rooms: RoomMap, grid: LayoutGrid) -> np.ndarray:
    out = np.zeros(CONTEXT_DIM, dtype=np.float32)
    free = scenario.grid.free_count
    for i, a in enumerate(scenario.desired_areas):
        out[i] = a / free
    labels = rooms.label_map()
    for rid, region in labels.items():
        out[N_MAX_ROOMS + rid - 1] = region.area / free
    base = 2 * N_MAX_ROOMS
    desired = scenario.desired_adjacencies
    for p, (i, j) in enumerate(_PAIRS):
        if (i, j) in desired:
            out[base + p] = 1.0
    if len(labels) >= 2:
        mat = adjacency_matrix(grid, labels)
        n = mat.shape[0]
        for p, (i, j) in enumerate(_PAIRS):
            if i <= n and j <= n and mat[i - 1, j - 1]:
                out[base + _PAIR_COUNT + p] = 1.0
    return out


def observe_image(grid: LayoutGrid) -> np.ndarray:
    """H x W x 3 uint8 raster; row index equals the cell's y coordinate."""
    img = np.zeros((grid.height, grid.width, 3), dtype=np.uint8)
    for y in range(grid.height):
        for x in range(grid.width):
            k = grid.kind[y, x]
            if k == FREE:
                img[y, x] = WHITE
            elif k == MASKED:
                img[y, x] = BLACK
            else:
                wid = int(grid.owner[y, x])
                if k == WALL_HARD:
                    img[y, x] = PALETTE[(wid - 1) % len(PALETTE)]
                else:
                    img[y, x] = wall_soft_color(wid)
    return img


def build_observation(
    scenario: Scenario,
    grid: LayoutGrid,
    walls: list[PlacedWall],
    rooms: RoomMap,
    obs_mode: str = "features",
    context_on: bool = True,
) -> Observation:
    if obs_mode == "features":
        layout = observe_features(walls, grid.width, grid.height, scenario.n_rooms)
    elif obs_mode == "image":
        layout = observe_image(grid)
    else:
        raise ValueError(f"unknown obs mode {obs_mode!r}")
    if context_on:
        context = observe_context(scenario, rooms, grid)
    else:
        context = np.zeros(0, dtype=np.float32)
    return Observation(layout, context)
