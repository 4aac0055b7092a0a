import math

import pytest
from hypothesis import given, settings, strategies as st

from socialnav.adaptation import AdaptationConfig
from socialnav.approach import ApproachConfig
from socialnav.evaluation import (EvalConfig, HsciSample, PerimeterReport, GroupPerimeter, breach_intervals,
                                  compare_perimeters, compute_sdi, compute_sgi, compute_sii, load_dataset,
                                  ring_group, situation_perimeters, synthetic_dataset, write_dataset)
from socialnav.field import PersonState, Pose2D, SceneState, build_group


def test_sii_values():
    scene = SceneState((PersonState("p", Pose2D(0, 0)),))
    assert compute_sii(Pose2D(0, 0), scene) == pytest.approx(1.0)
    assert compute_sii(Pose2D(0.45, 0), scene) == pytest.approx(math.exp(-0.5))
    assert compute_sii(Pose2D(3, 0), SceneState()) == 0.0


def test_sii_comfort_distance():
    # SII drops to the comfort threshold at d = 0.45 * sqrt(2 ln(1/0.14))
    d = 0.45 * math.sqrt(2 * math.log(1 / 0.14))
    scene = SceneState((PersonState("p", Pose2D(0, 0)),))
    assert compute_sii(Pose2D(d, 0), scene) == pytest.approx(0.14)


def test_sgi_uses_group_radius():
    ps = ring_group("", 4, 1.0)
    scene = SceneState(tuple(ps), (build_group("g", ps),))
    assert compute_sgi(Pose2D(1.0, 0.0), scene) == pytest.approx(math.exp(-0.5))


def test_sdi():
    target = Pose2D(0, 0, 0)
    assert compute_sdi(Pose2D(1, 0, math.pi), target) == pytest.approx(1.0)
    assert compute_sdi(Pose2D(1, 0, 0), target) == pytest.approx(0.0)
    assert compute_sdi(Pose2D(1, 0, math.pi / 2), target) == pytest.approx(0.5)


def test_hsci_range_validated():
    with pytest.raises(ValueError):
        HsciSample(0.0, 1.2, 0.0, 0.0)


def test_breach_intervals():
    t = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    v = [0.0, 0.2, 0.3, 0.1, 0.5, 0.5]
    out = breach_intervals(t, v, 0.1, 0.14)
    assert [(round(b.start, 9), round(b.end, 9)) for b in out] == [(0.1, 0.3), (0.4, 0.6)]
    assert out[0].peak == 0.3
    assert breach_intervals(t, [0.14] * 6, 0.1, 0.14) == []


def test_breach_transient_and_behind_flags():
    out = breach_intervals([0.0, 0.1], [0.5, 0.0], 0.1, 0.14, [True, False], grace=0.15)
    assert out[0].behind and out[0].transient


def test_dataset_roundtrip(tmp_path):
    data = synthetic_dataset(5, seed=3)
    path = tmp_path / "d.csv"
    write_dataset(path, data)
    back = load_dataset(path)
    assert [sid for sid, _ in back] == [sid for sid, _ in data]
    for (_, a), (_, b) in zip(data, back):
        assert [p.pose for p in a.persons] == [p.pose for p in b.persons]
        assert a.groups[0].members == b.groups[0].members


def test_dataset_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("situation_id,x,y\n1,0,0\n")
    with pytest.raises(ValueError):
        load_dataset(path)


def test_empty_dataset_report():
    reps = compare_perimeters([], ApproachConfig(), AdaptationConfig(), s_r_values=(0.8,), s_h_values=(0.3,))
    assert len(reps) == 1 and reps[0].groups == [] and reps[0].increase_pct == 0.0


def test_report_aggregation():
    rep = PerimeterReport(0.8, 0.3, [GroupPerimeter("a", "g", 3, 1.0, 1.5), GroupPerimeter("b", "g", 3, 1.0, 1.0),
                                     GroupPerimeter("c", "g", 2, 0.0, 0.0)])
    assert rep.increase_pct == pytest.approx(25.0)
    sizes = rep.by_size()
    assert sizes[3]["increase_pct"] == pytest.approx(25.0)
    assert sizes[2]["increase_pct"] == 0.0
    assert rep.groups[2].increase_pct is None


def test_synthetic_dataset_is_reproducible():
    a = synthetic_dataset(10, seed=9)
    b = synthetic_dataset(10, seed=9)
    assert [[p.pose for p in s.persons] for _, s in a] == [[p.pose for p in s.persons] for _, s in b]
    assert {len(s.persons) for _, s in synthetic_dataset(60, seed=1)} == {2, 3, 4, 5}


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.floats(0.6, 1.6), st.floats(0.225, 0.45), st.sampled_from([0.45, 0.8]))
def test_adapted_perimeter_never_smaller(n, gap, s_h, s_r):
    ps = ring_group("", n, gap / (2 * math.sin(math.pi / n)))
    scene = SceneState(tuple(ps), (build_group("g", ps),))
    out = situation_perimeters(scene, "s", AdaptationConfig(s_h=s_h, s_r=s_r), ApproachConfig(robot_width=s_r))
    assert out[0].adapted >= out[0].baseline


def test_perimeter_non_increasing_in_tolerance():
    ps = ring_group("", 4, 1.0)
    scene = SceneState(tuple(ps), (build_group("g", ps),))
    vals = [situation_perimeters(scene, "s", AdaptationConfig(s_h=s_h, s_r=0.45), ApproachConfig(robot_width=0.45))[0].adapted
            for s_h in (0.225, 0.3, 0.375, 0.45)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_eval_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(comfort_threshold=1.5)
