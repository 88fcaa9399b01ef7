import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planray.grid import GridSpec
from planray.scenario import (
    ParseError,
    Scenario,
    ValidationError,
    builtin_scenarios,
    get_scenario,
    load_scenario,
    mini3_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)

TABLE = {
    1: (4, True, [110, 92, 57, 52], {(1, 2), (2, 3), (2, 4), (1, 3)}, 400.0),
    2: (5, True, [83, 78, 60, 44, 33], {(1, 2), (1, 5), (3, 4)}, 400.0),
    3: (6, False, [111, 75, 38, 34, 30, 21], {(3, 4), (1, 6), (1, 4)}, 200.0),
    4: (7, True, [65, 60, 48, 36, 30, 28, 23], {(2, 3), (1, 5), (6, 7), (3, 4)}, 400.0),
    5: (8, False, [85, 64, 64, 50, 41, 32, 32, 28], {(2, 8), (4, 6), (1, 7), (2, 7)}, 200.0),
    6: (9, False, [63, 60, 58, 50, 34, 33, 27, 27, 26],
        {(3, 9), (8, 9), (3, 6), (7, 8), (5, 7), (1, 8)}, 200.0),
}


def test_builtins_match_table():
    scenarios = builtin_scenarios()
    assert len(scenarios) == 6
    for s, num in zip(scenarios, range(1, 7)):
        n, prop, areas, adj, R = TABLE[num]
        assert s.name == f"scenario{num}"
        assert s.n_rooms == n
        assert s.proportion_enabled == prop
        assert list(s.desired_areas) == areas
        assert s.desired_adjacencies == frozenset(adj)
        assert s.reward_R == R
        assert s.grid.width == 20 and s.grid.height == 20
        assert s.a_min == 10 and s.a_th == 4 and s.p_star == 5


def test_builtins_all_validate():
    for s in builtin_scenarios():
        assert validate_scenario(s) == []


def test_scenario6_has_six_adjacencies_including_1_8():
    s = builtin_scenarios()[5]
    assert len(s.desired_adjacencies) == 6
    assert (1, 8) in s.desired_adjacencies


def test_validate_area_below_minimum():
    s = dataclasses.replace(mini3_scenario(), desired_areas=(40, 30, 5))
    errors = validate_scenario(s)
    assert any("AreaBelowMinimum" in e for e in errors)


def test_validate_adjacency_out_of_range():
    s = dataclasses.replace(
        builtin_scenarios()[0], desired_adjacencies=frozenset({(1, 7)}))
    errors = validate_scenario(s)
    assert any("AdjacencyIdOutOfRange" in e for e in errors)


def test_validate_disconnected_mask():
    masked = frozenset((4, y) for y in range(8))
    s = dataclasses.replace(mini3_scenario(),
                            grid=GridSpec(8, 8, masked), desired_areas=(10, 10, 10))
    errors = validate_scenario(s)
    assert any("Disconnected" in e for e in errors)


def test_roundtrip_builtin(tmp_path):
    s = builtin_scenarios()[1]
    path = str(tmp_path / "s2.scenario.json")
    save_scenario(s, path)
    assert load_scenario(path) == s


def test_missing_key_parse_error(tmp_path):
    data = scenario_to_dict(builtin_scenarios()[0])
    del data["desired_areas"]
    path = tmp_path / "bad.scenario.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ParseError) as e:
        load_scenario(str(path))
    assert "desired_areas" in str(e.value)


def test_masked_out_of_bounds_validation_error(tmp_path):
    data = scenario_to_dict(builtin_scenarios()[0])
    data["grid"]["masked"] = [[25, 0]]
    path = tmp_path / "oob.scenario.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ValidationError):
        load_scenario(str(path))


def test_invalid_json_parse_error(tmp_path):
    path = tmp_path / "broken.scenario.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(str(path))


def test_get_scenario_unknown_lists_builtins():
    with pytest.raises(KeyError) as e:
        get_scenario("nope")
    assert "scenario1" in str(e.value)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_roundtrip_random_scenarios(data):
    w = data.draw(st.integers(8, 24))
    h = data.draw(st.integers(8, 24))
    n = data.draw(st.integers(2, 5))
    a_min = 4
    a_th = data.draw(st.integers(0, 4))
    # keep areas small enough to satisfy the feasibility bound
    budget = (w * h - 3 * (n - 1)) // n
    areas = tuple(data.draw(st.integers(a_min + a_th, max(a_min + a_th, budget)))
                  for _ in range(n))
    pairs = data.draw(st.sets(
        st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda p: p[0] != p[1]),
        max_size=3))
    s = Scenario(
        name=data.draw(st.text("abcdefgh", min_size=1, max_size=8)),
        grid=GridSpec(w, h),
        n_rooms=n,
        desired_areas=areas,
        proportion_enabled=data.draw(st.booleans()),
        desired_adjacencies=frozenset((min(i, j), max(i, j)) for i, j in pairs),
        reward_R=200.0,
        a_min=a_min,
        a_th=a_th,
        max_steps=data.draw(st.integers(n - 1, 500)),
    )
    if validate_scenario(s):
        return  # random draw violated feasibility; nothing to round-trip
    assert scenario_from_dict(scenario_to_dict(s)) == s
