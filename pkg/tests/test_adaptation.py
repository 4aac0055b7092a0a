import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialnav.adaptation import (AdaptationConfig, VelocityAdaptConfig, adapt_group, adapt_group_member,
                                  adapt_individual_target, adapt_scene, adapt_velocity, distance_modifier,
                                  member_neighbors, side_anchor_points)
from socialnav.evaluation import ring_group
from socialnav.field import GaussianParams, PersonState, Pose2D, SceneState, build_group

CFG = AdaptationConfig()
VCFG = VelocityAdaptConfig()


@pytest.mark.parametrize("sigma_f, expected", [(1.2, 0.9), (0.6, 0.45), (0.45, 0.45), (0.3, 0.3), (2.0, 1.7)])
def test_individual_shrink(sigma_f, expected):
    out = adapt_individual_target(GaussianParams(211, sigma_f, 0.5, 0.4, 0.4), CFG)
    assert out.sigma_f == pytest.approx(expected, abs=1e-12)


def test_individual_shrink_keeps_other_params():
    p = GaussianParams(150, 1.2, 0.6, 0.3, 0.35)
    out = adapt_individual_target(p, CFG)
    assert (out.amplitude, out.sigma_r, out.sigma_sl, out.sigma_sr) == (150, 0.6, 0.3, 0.35)


def test_anchor_points_are_lateral_offsets():
    me = PersonState("a", Pose2D(0.0, 0.0, 0.0))
    left = Pose2D(0.0, 2.0, 0.0)
    right = Pose2D(0.0, -2.0, 0.0)
    al, ar, al_adj, ar_adj = side_anchor_points(me, left, right, 0.375)
    assert al == pytest.approx((0.0, 0.375))
    assert ar == pytest.approx((0.0, -0.375))
    # the left neighbour contributes its right-hand point, and vice versa
    assert al_adj == pytest.approx((0.0, 1.625))
    assert ar_adj == pytest.approx((0.0, -1.625))


def test_anchor_points_missing_neighbours():
    me = PersonState("a", Pose2D(0.0, 0.0, 0.0))
    assert side_anchor_points(me, None, None, 0.3)[2:] == (None, None)


def _square(r):
    ps = ring_group("", 4, r)
    return SceneState(tuple(ps), (build_group("g", ps),))


def test_group_member_shrink_worked_example():
    # Square of side sqrt(2) (ring radius 1): anchors sit 0.375 in from each
    # corner along the tangent; the gap is (1 - 0.375) * sqrt(2).
    scene = _square(1.0)
    cfg = AdaptationConfig(s_h=0.375, s_r=0.8)
    gap = (1.0 - 0.375) * math.sqrt(2)
    shift = (gap - 0.8) / 2
    # B lies on the line between anchors; its lateral offset from the person
    # is 0.375 plus the shift projected on the lateral axis (45 degrees).
    d_aux = 0.375 + shift * math.cos(math.pi / 4)
    out = adapt_group(scene, "g", cfg)
    for p in out.persons:
        expected = max(min(0.4, d_aux), 0.225)
        assert p.params.sigma_sl == pytest.approx(expected, abs=1e-12)
        assert p.params.sigma_sr == pytest.approx(expected, abs=1e-12)


def test_group_gap_too_small_leaves_params():
    scene = _square(0.5)
    out = adapt_group(scene, "g", AdaptationConfig(s_h=0.375, s_r=0.8))
    assert [p.params for p in out.persons] == [p.params for p in scene.persons]


def test_side_by_side_pair_not_adapted():
    a = PersonState("a", Pose2D(0, 0, 0))
    b = PersonState("b", Pose2D(0, 3, 0))
    scene = SceneState((a, b), (build_group("g", [a, b]),))
    out = adapt_group(scene, "g", CFG)
    assert out.persons == scene.persons


def test_side_deviation_floor():
    # Wide gap whose projected point falls inside the body half-width.
    a = PersonState("a", Pose2D(0, 0, 0), params=GaussianParams(211, 1.2, 0.5, 0.4, 0.4))
    b = PersonState("b", Pose2D(1.0, 1.5, -math.pi / 2))
    cfg = AdaptationConfig(s_h=0.225, s_r=0.3)
    out = adapt_group_member(a, b, None, cfg)
    assert out.sigma_sl >= 0.225
    assert out.sigma_sr == 0.4


def test_neighbours_of_ring_are_mutual():
    scene = _square(1.0)
    nb = member_neighbors(scene, "g")
    for pid, (left, right) in nb.items():
        assert nb[left][1] == pid
        assert nb[right][0] == pid


def test_single_member_group_untouched():
    a = PersonState("a", Pose2D(0, 0, 0))
    scene = SceneState((a,), (build_group("g", [a]),))
    assert adapt_group(scene, "g", CFG) == scene


@pytest.mark.parametrize("d, expected", [(0.0, 0.0), (1.5, 0.5), (3.0, 1.0), (6.0, 1.0), (7.0, 1.0)])
def test_distance_modifier(d, expected):
    assert distance_modifier(d, 6.0) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("sigma, v, d, expected", [
    (1.2, 0.0, 10.0, 1.2),
    (1.0, 0.5, 10.0, 1.75),
    (1.0, 1.0, 10.0, 2.0),       # capped by sigma + a_limit
    (1.0, 1.0, 1.5, 1.75),       # d_mod = 0.5
    (1.0, 0.2, 0.0, 1.0),        # robot on top of the person
])
def test_velocity_growth(sigma, v, d, expected):
    assert adapt_velocity(sigma, v, d, VCFG) == pytest.approx(expected, abs=1e-12)


def test_adapt_scene_flags():
    p = PersonState("p", Pose2D(0, 0, 0), (1.0, 0.0))
    scene = SceneState((p,))
    none = adapt_scene(scene, (10, 0), "p", CFG, VCFG, velocity=False, arrangement=False)
    assert none.person("p").params == p.params
    shrink = adapt_scene(scene, (10, 0), "p", CFG, VCFG, velocity=False)
    assert shrink.person("p").params.sigma_f == pytest.approx(0.9)
    grow = adapt_scene(scene, (10, 0), "p", CFG, VCFG, arrangement=False)
    assert grow.person("p").params.sigma_f == pytest.approx(min(1.2 + 1.0, 1.2 * 2.5))


def test_config_validation():
    with pytest.raises(ValueError):
        AdaptationConfig(s_h=0.1)
    with pytest.raises(ValueError):
        AdaptationConfig(s_r=0)
    with pytest.raises(ValueError):
        VelocityAdaptConfig(a_adapt=-1)


def test_randomized_monotonicity_and_floors():
    rng = np.random.default_rng(1234)
    for _ in range(10_000):
        sf = rng.uniform(0.05, 3.0)
        zeta = rng.uniform(0.0, 1.0)
        cfg = AdaptationConfig(zeta=zeta)
        out = adapt_individual_target(GaussianParams(211, sf, 0.5, 0.4, 0.4), cfg).sigma_f
        assert out <= sf
        assert out >= min(sf, cfg.intimate_radius)
        v = rng.uniform(0.0, 3.0)
        d = rng.uniform(0.0, 12.0)
        g = adapt_velocity(sf, v, d, VCFG)
        assert sf <= g <= sf + VCFG.a_limit + 1e-12
        assert adapt_velocity(sf, v + 0.1, d, VCFG) >= g


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 1.6), st.floats(0.225, 0.45), st.floats(0.3, 1.0), st.integers(3, 6))
def test_group_shrink_never_grows_and_respects_floor(radius, s_h, s_r, n):
    ps = ring_group("", n, radius)
    scene = SceneState(tuple(ps), (build_group("g", ps),))
    out = adapt_group(scene, "g", AdaptationConfig(s_h=s_h, s_r=s_r))
    for before, after in zip(scene.persons, out.persons):
        for side in ("sigma_sl", "sigma_sr"):
            b, a = getattr(before.params, side), getattr(after.params, side)
            assert a <= b
            assert a >= min(b, 0.225)


def test_side_by_side_worked_example():
    # Persons 2 m apart facing +x: the gap between facing anchors is 1.25 m,
    # so the robot's edge sits 0.225 m inside our anchor and d_aux = 0.6.
    wide = GaussianParams(211, 1.2, 0.5, 1.0, 1.0)
    a = PersonState("a", Pose2D(0.0, 0.0, 0.0), params=wide)
    b = PersonState("b", Pose2D(0.0, 2.0, 0.0), params=wide)
    parallel = AdaptationConfig(s_h=0.375, s_r=0.8, orientation_diff_bounds=(0.0, 3 * math.pi / 4))
    assert adapt_group_member(a, b, None, parallel).sigma_sl == pytest.approx(0.6, abs=1e-12)
    near = PersonState("b", Pose2D(0.0, 1.5, 0.0), params=wide)
    assert adapt_group_member(a, near, None, parallel).sigma_sl == 1.0
    # the default gate leaves parallel neighbours alone
    assert adapt_group_member(a, b, None, AdaptationConfig()).sigma_sl == 1.0
