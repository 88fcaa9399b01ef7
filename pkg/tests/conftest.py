import numpy as np
import pytest
from scipy import ndimage

from planray.grid import FREE, GridSpec, LayoutGrid, Region
from planray.scenario import Scenario


def oracle_regions(grid: LayoutGrid) -> list[set]:
    """Independent flood fill: scipy connected-component labeling, 4-connectivity."""
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(grid.kind == FREE, structure=structure)
    out = []
    for i in range(1, n + 1):
        ys, xs = np.nonzero(labels == i)
        out.append({(int(x), int(y)) for x, y in zip(xs, ys)})
    return out


def assert_matches_oracle(regions: list[Region], grid: LayoutGrid):
    got = sorted([frozenset(r.cells) for r in regions], key=lambda s: sorted(s))
    want = sorted([frozenset(s) for s in oracle_regions(grid)], key=lambda s: sorted(s))
    assert got == want


def duo_scenario(max_steps: int = 200) -> Scenario:
    """Two-room 8x8 scenario; random policies complete it quickly."""
    return Scenario(
        name="duo",
        grid=GridSpec(8, 8),
        n_rooms=2,
        desired_areas=(30, 26),
        proportion_enabled=False,
        desired_adjacencies=frozenset({(1, 2)}),
        reward_R=200.0,
        max_steps=max_steps,
    )


@pytest.fixture
def duo():
    return duo_scenario()
