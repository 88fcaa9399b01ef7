"""Discrete cell raster: masking, flood-fill region extraction, canonical hashing.

Coordinates are (x, y) with the origin at the bottom-left corner; x indexes
columns in [0, W) and y indexes rows in [0, H).  Cell ordering ("lexicographic")
is y-major: (y, x) ascending.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np

Coord = tuple[int, int]

# Cell kinds.  Wall cells additionally carry the owning wall id in a parallel
# array; free/masked cells keep owner 0 so hashing stays canonical.
FREE = 0
MASKED = 1
WALL_HARD = 2
WALL_SOFT = 3


class InvalidSpec(ValueError):
    """Raised when a grid specification cannot produce a usable layout."""


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    masked: frozenset[Coord] = field(default_factory=frozenset)

    def check(self) -> None:
        if self.width < 4 or self.height < 4:
            raise InvalidSpec(f"grid must be at least 4x4, got {self.width}x{self.height}")
        for (x, y) in self.masked:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise InvalidSpec(f"masked cell ({x}, {y}) out of bounds")
        if len(self.masked) >= self.width * self.height:
            raise InvalidSpec("no free cell remains")

    @property
    def free_count(self) -> int:
        return self.width * self.height - len(self.masked)


@dataclass(frozen=True)
class Region:
    """A 4-connected set of free cells."""

    cells: frozenset[Coord]
    area: int
    bbox: tuple[int, int, int, int]  # (min x, min y, max x, max y)

    @staticmethod
    def from_cells(cells) -> "Region":
        cells = frozenset(cells)
        if not cells:
            raise ValueError("region must contain at least one cell")
        xs = [c[0] for c in cells]
        ys = [c[1] for c in cells]
        return Region(cells, len(cells), (min(xs), min(ys), max(xs), max(ys)))

    @property
    def first_cell(self) -> Coord:
        """Lexicographically smallest cell, y-major."""
        x, y = min(self.cells, key=lambda c: (c[1], c[0]))
        return (x, y)


class LayoutGrid:
    """Dense W x H raster of cell states; the geometric source of truth.

    Value type: operations that change state work on a copy and return it,
    never mutating a grid they did not create.
    """

    __slots__ = ("spec", "kind", "owner")

    def __init__(self, spec: GridSpec, kind: np.ndarray, owner: np.ndarray):
        self.spec = spec
        self.kind = kind    # uint8 (H, W), indexed [y, x]
        self.owner = owner  # int32 (H, W), wall id or 0

    @property
    def width(self) -> int:
        return self.spec.width

    @property
    def height(self) -> int:
        return self.spec.height

    def copy(self) -> "LayoutGrid":
        return LayoutGrid(self.spec, self.kind.copy(), self.owner.copy())

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.spec.width and 0 <= y < self.spec.height

    def kind_at(self, x: int, y: int) -> int:
        return int(self.kind[y, x])

    def owner_at(self, x: int, y: int) -> int:
        return int(self.owner[y, x])

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and self.kind[y, x] == FREE

    def counts(self) -> dict[int, int]:
        """Cell count per kind; always sums to W*H."""
        vals, counts = np.unique(self.kind, return_counts=True)
        out = {FREE: 0, MASKED: 0, WALL_HARD: 0, WALL_SOFT: 0}
        out.update(dict(zip((int(v) for v in vals), (int(c) for c in counts))))
        return out

    def free_count(self) -> int:
        return int((self.kind == FREE).sum())

    # Mutators: only for use by code that owns the grid copy.
    def set_cell(self, x: int, y: int, kind: int, owner: int = 0) -> None:
        self.kind[y, x] = kind
        self.owner[y, x] = owner


def new_grid(spec: GridSpec) -> LayoutGrid:
    spec.check()
    kind = np.full((spec.height, spec.width), FREE, dtype=np.uint8)
    for (x, y) in spec.masked:
        kind[y, x] = MASKED
    owner = np.zeros((spec.height, spec.width), dtype=np.int32)
    return LayoutGrid(spec, kind, owner)


def free_regions(grid: LayoutGrid) -> list[Region]:
    """4-connected components of free cells, ordered by smallest cell (y, x)."""
    W, H = grid.width, grid.height
    kind = grid.kind
    seen = np.zeros((H, W), dtype=bool)
    regions: list[Region] = []
    for y in range(H):
        for x in range(W):
            if kind[y, x] != FREE or seen[y, x]:
                continue
            cells = []
            queue = deque([(x, y)])
            seen[y, x] = True
            while queue:
                cx, cy = queue.popleft()
                cells.append((cx, cy))
                for nx, ny in ((cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)):
                    if 0 <= nx < W and 0 <= ny < H and kind[ny, nx] == FREE and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((nx, ny))
            regions.append(Region.from_cells(cells))
    return regions


def layout_hash(grid: LayoutGrid) -> int:
    """Stable 64-bit digest of (W, H, cell states in row-major order)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(grid.width.to_bytes(4, "little"))
    h.update(grid.height.to_bytes(4, "little"))
    h.update(np.ascontiguousarray(grid.kind).tobytes())
    h.update(np.ascontiguousarray(grid.owner.astype("<i4")).tobytes())
    return int.from_bytes(h.digest(), "little")


def hash_hex(grid: LayoutGrid) -> str:
    return f"{layout_hash(grid):016x}"
