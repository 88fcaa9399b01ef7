"""PNG rendering of layouts with adjacency overlays.

Rooms are filled from the shared palette, wall cells use the full (hard) or
white-blended (soft) wall color, masked cells are black.  Straight lines
between room centroids mark adjacencies: green for achieved desired pairs,
red for missed desired pairs, blue for extra connections.
"""

from __future__ import annotations

from dataclasses import dataclass

from PIL import Image, ImageDraw

from .grid import FREE, MASKED, WALL_HARD, LayoutGrid, Region
from .obs import BLACK, PALETTE, WHITE, wall_soft_color
from .walls import adjacency_matrix


@dataclass(frozen=True)
class RenderStyle:
    cell_px: int = 24
    achieved_color: tuple[int, int, int] = (0, 170, 0)
    missed_color: tuple[int, int, int] = (220, 0, 0)
    extra_color: tuple[int, int, int] = (0, 90, 220)
    line_width: int = 3

    def room_fill(self, room_id: int) -> tuple[int, int, int]:
        r, g, b = PALETTE[(room_id - 1) % len(PALETTE)]
        return ((r + 3 * 255) // 4, (g + 3 * 255) // 4, (b + 3 * 255) // 4)


def _centroid_px(region: Region, height: int, cell_px: int) -> tuple[float, float]:
    xs = [c[0] for c in region.cells]
    ys = [c[1] for c in region.cells]
    cx = (sum(xs) / len(xs) + 0.5) * cell_px
    # Image rows grow downward; cell y grows upward.
    cy = (height - (sum(ys) / len(ys) + 0.5)) * cell_px
    return cx, cy


def render_layout(
    grid: LayoutGrid,
    rooms: dict[int, Region],
    desired_adjacencies: frozenset[tuple[int, int]] | set[tuple[int, int]],
    path: str,
    style: RenderStyle = RenderStyle(),
) -> None:
    """Write a (W*cell_px) x (H*cell_px) PNG of the layout."""
    px = style.cell_px
    W, H = grid.width, grid.height
    img = Image.new("RGB", (W * px, H * px), WHITE)
    draw = ImageDraw.Draw(img)

    cell_room: dict[tuple[int, int], int] = {}
    for rid, region in rooms.items():
        for c in region.cells:
            cell_room[c] = rid

    for y in range(H):
        for x in range(W):
            k = int(grid.kind[y, x])
            if k == FREE:
                rid = cell_room.get((x, y))
                color = style.room_fill(rid) if rid else WHITE
            elif k == MASKED:
                color = BLACK
            elif k == WALL_HARD:
                color = PALETTE[(int(grid.owner[y, x]) - 1) % len(PALETTE)]
            else:
                color = wall_soft_color(int(grid.owner[y, x]))
            x0 = x * px
            y0 = (H - 1 - y) * px
            draw.rectangle([x0, y0, x0 + px - 1, y0 + px - 1], fill=color)

    if len(rooms) >= 2:
        achieved = adjacency_matrix(grid, rooms)
        desired = {(min(i, j), max(i, j)) for (i, j) in desired_adjacencies}
        centroids = {rid: _centroid_px(region, H, px) for rid, region in rooms.items()}
        ids = sorted(rooms)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                i, j = ids[a], ids[b]
                connected = bool(achieved[i - 1, j - 1])
                wanted = (i, j) in desired
                if wanted and connected:
                    color = style.achieved_color
                elif wanted:
                    color = style.missed_color
                elif connected:
                    color = style.extra_color
                else:
                    continue
                draw.line([centroids[i], centroids[j]], fill=color, width=style.line_width)
    img.save(path, format="PNG")


def render_env(env, path: str, style: RenderStyle = RenderStyle()) -> None:
    """Render a single-agent environment's current state."""
    render_layout(env.grid, env.rooms.label_map(),
                  env.scenario.desired_adjacencies, path, style)
