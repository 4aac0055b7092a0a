import math

import numpy as np
import pytest
import yaml
from PIL import Image

from socialnav.costmap import (FREE, INSCRIBED, LETHAL, UNKNOWN, Costmap, GridSpec, LayerStack,
                               apply_adaptive_layer, clean_people, compose, from_bytes, inflate, load_binary,
                               load_csv, mark_obstacles, occupancy_to_costs, quantize, rasterize_static,
                               save_binary, save_csv, save_map, support_radius, to_bytes)
from socialnav.field import GaussianParams, PersonState, Pose2D, SceneState

from oracles import brute_master, compose_fixture


@pytest.mark.parametrize("seed", [0, 1])
def test_compose_matches_brute_force(seed):
    spec, static, obstacles, scene = compose_fixture(seed)
    stack = LayerStack(spec, Costmap(spec, static), obstacles, 0.45, 0.3, 4.0)
    got = compose(stack, scene).cells
    want = brute_master(spec, static, obstacles, scene, 0.45, 0.3, 4.0)
    assert np.array_equal(got, want)


def test_world_to_cell_and_back():
    spec = GridSpec((1.0, 2.0), 0.1, 10, 5)
    assert spec.world_to_cell(1.0, 2.0) == (0, 0)
    assert spec.world_to_cell(1.95, 2.05) == (0, 9)
    assert spec.world_to_cell(2.0, 2.0) is None
    assert spec.world_to_cell(0.99, 2.0) is None
    assert spec.cell_center(0, 0) == pytest.approx((1.05, 2.05))


def test_quantize_rounds_half_up():
    assert list(quantize([0.49, 0.5, 1.5, 2.5])) == [0, 1, 2, 3]


def test_support_radius_rounds_to_zero():
    a, s, res = 211.0, 0.7, 0.05
    r = support_radius(a, s, res)
    assert a * math.exp(-(r / (2 * s)) ** 2) < 0.5
    assert support_radius(0.2, s, res) == 0.0


def test_single_person_layer_peak_and_symmetry():
    spec = GridSpec((-2.0, -2.0), 0.05, 80, 80)
    scene = SceneState((PersonState("p", Pose2D(0.025, 0.025, 0.0), params=GaussianParams(211, 1.0, 1.0, 1.0, 1.0)),))
    cells = apply_adaptive_layer(Costmap.empty(spec), scene).cells
    i, j = spec.world_to_cell(0.025, 0.025)
    assert cells[i, j] == 211
    assert cells[i, j + 10] == cells[i, j - 10] == cells[i + 10, j] == cells[i - 10, j]


def test_adaptive_layer_keeps_unknown_and_lethal():
    spec = GridSpec((0.0, 0.0), 0.1, 20, 20)
    base = Costmap.empty(spec)
    base.cells[10, 10] = UNKNOWN
    base.cells[10, 11] = LETHAL
    scene = SceneState((PersonState("p", Pose2D(1.05, 1.05)),))
    out = apply_adaptive_layer(base, scene).cells
    assert out[10, 10] == UNKNOWN
    assert out[10, 11] == LETHAL


def test_empty_scene_layer_is_noop():
    spec = GridSpec((0.0, 0.0), 0.1, 20, 20)
    base = Costmap.empty(spec)
    assert np.array_equal(apply_adaptive_layer(base, SceneState()).cells, base.cells)


def test_clean_people_clears_only_near_lethal():
    spec = GridSpec((0.0, 0.0), 0.1, 20, 20)
    m = mark_obstacles(Costmap.empty(spec), [(1.05, 1.05), (1.85, 1.85)])
    out = clean_people(m, SceneState((PersonState("p", Pose2D(1.0, 1.0)),)), 0.3)
    assert out.cells[10, 10] == FREE
    assert out.cells[18, 18] == LETHAL


def test_inflation_profile():
    spec = GridSpec((0.0, 0.0), 0.1, 21, 1)
    m = Costmap.empty(spec)
    m.cells[0, 0] = LETHAL
    out = inflate(m, 0.2, 2.0).cells[0]
    assert out[0] == LETHAL
    assert out[1] == out[2] == INSCRIBED
    assert out[5] == math.floor(252 * math.exp(-2.0 * (0.5 - 0.2)) + 0.5)
    assert all(a >= b for a, b in zip(out[1:], out[2:]))


def test_obstacles_outside_grid_ignored():
    spec = GridSpec((0.0, 0.0), 0.1, 5, 5)
    m = mark_obstacles(Costmap.empty(spec), [(-1.0, -1.0), (10.0, 0.2)])
    assert not m.cells.any()


def test_occupancy_thresholds():
    px = np.array([[0, 254, 205, 100]], dtype=np.uint8)
    assert list(occupancy_to_costs(px)[0]) == [LETHAL, FREE, UNKNOWN, UNKNOWN]


def test_pgm_roundtrip(tmp_path):
    spec = GridSpec((1.5, -0.5), 0.05, 30, 20)
    c = Costmap.empty(spec)
    c.cells[0, :] = LETHAL
    c.cells[5:8, 3:9] = UNKNOWN
    c.cells[19, 29] = LETHAL
    save_map(c, tmp_path / "m.yaml")
    back = rasterize_static(tmp_path / "m.yaml")
    assert back.spec == spec
    assert np.array_equal(back.cells, c.cells)
    # row 0 is the bottom of the map, which is the last image row
    img = np.array(Image.open(tmp_path / "m.pgm"))
    assert (img[-1] == 0).all()


def test_bad_map_raises_value_error(tmp_path):
    (tmp_path / "bad.yaml").write_text(yaml.safe_dump({"image": "missing.pgm", "resolution": 0.05}))
    with pytest.raises(ValueError):
        rasterize_static(tmp_path / "bad.yaml")
    with pytest.raises(ValueError):
        rasterize_static(tmp_path / "nope.yaml")


def test_csv_and_binary_roundtrip(tmp_path):
    spec = GridSpec((0.0, 0.0), 0.05, 7, 4)
    c = Costmap(spec, np.arange(28, dtype=np.uint8).reshape(4, 7) * 9)
    save_csv(c, tmp_path / "c.csv")
    assert np.array_equal(load_csv(tmp_path / "c.csv", spec).cells, c.cells)
    save_binary(c, tmp_path / "c.bin")
    back = load_binary(tmp_path / "c.bin")
    assert np.array_equal(back.cells, c.cells)
    assert back.spec.width == 7 and back.spec.height == 4
    assert back.spec.resolution == pytest.approx(0.05)
    data = to_bytes(c)
    assert len(data) == 16 + 28
    with pytest.raises(ValueError):
        from_bytes(data[:-1])
    with pytest.raises(ValueError):
        from_bytes(data[:5])


def test_stack_grid_mismatch():
    with pytest.raises(ValueError):
        LayerStack(GridSpec(width=10, height=10), Costmap.empty(GridSpec(width=11, height=10)))


def test_layer_toggles():
    spec = GridSpec((0.0, 0.0), 0.1, 30, 30)
    scene = SceneState((PersonState("p", Pose2D(1.5, 1.5)),))
    only_static = compose(LayerStack(spec, None, [(0.5, 0.5)], use_inflation=False, use_adaptive=False), scene)
    assert only_static.cells[5, 5] == LETHAL and only_static.cells.sum() == LETHAL
    no_clean = compose(LayerStack(spec, None, [(1.5, 1.5)], use_clean_people=False, use_inflation=False,
                                  use_adaptive=False), scene)
    assert no_clean.cells[15, 15] == LETHAL
