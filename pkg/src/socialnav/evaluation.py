"""Human safety and comfort indexes, and the perimeter comparison study."""

from __future__ import annotations

import csv
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .adaptation import AdaptationConfig, adapt_group
from .approach import ApproachConfig, approach_perimeter
from .costmap import Costmap, GridSpec, apply_adaptive_layer
from .field import PersonState, Pose2D, SceneState, build_group, wrap_angle

COMFORT_THRESHOLD = 0.14


@dataclass(frozen=True)
class HsciSample:
    timestamp: float
    sii: float
    sgi: float
    sdi: float

    def __post_init__(self):
        for name in ("sii", "sgi", "sdi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class EvalConfig:
    comfort_threshold: float = COMFORT_THRESHOLD
    sii_sigma: float = 0.45
    transient_grace: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.comfort_threshold < 1.0:
            raise ValueError("comfort_threshold must lie in (0, 1)")
        if not self.sii_sigma > 0:
            raise ValueError("sii_sigma must be > 0")
        if self.transient_grace < 0:
            raise ValueError("transient_grace must be >= 0")


def _gauss(dx: float, dy: float, scale: float) -> float:
    if scale <= 0:
        return 1.0 if dx == 0 and dy == 0 else 0.0
    return math.exp(-(dx * dx + dy * dy) / (2.0 * scale * scale))


def compute_sii(robot: Pose2D, scene: SceneState, cfg: EvalConfig = EvalConfig()) -> float:
    return max((_gauss(robot.x - p.pose.x, robot.y - p.pose.y, cfg.sii_sigma) for p in scene.persons),
               default=0.0)


def compute_sgi(robot: Pose2D, scene: SceneState, cfg: EvalConfig = EvalConfig()) -> float:
    return max((_gauss(robot.x - g.center[0], robot.y - g.center[1], g.radius) for g in scene.groups),
               default=0.0)


def compute_sdi(robot: Pose2D, target: Pose2D) -> float:
    """1 when the robot faces the target head-on, 0 when it faces the same way."""
    head_on = target.theta + math.pi
    return (1.0 + math.cos(wrap_angle(robot.theta - head_on))) / 2.0


@dataclass(frozen=True)
class BreachInterval:
    index: str
    start: float
    end: float
    peak: float
    behind: bool
    transient: bool = False

    @property
    def duration(self) -> float:
        return self.end - self.start


def _behind(robot: Pose2D, scene: SceneState) -> bool:
    if not scene.persons:
        return False
    p = min(scene.persons, key=lambda q: math.hypot(robot.x - q.pose.x, robot.y - q.pose.y))
    return ((robot.x - p.pose.x) * math.cos(p.pose.theta) + (robot.y - p.pose.y) * math.sin(p.pose.theta)) < 0


def breach_intervals(times: Sequence[float], values: Sequence[float], dt: float, threshold: float,
                     behind_flags: Sequence[bool] | None = None, name: str = "sii",
                     grace: float = 0.0) -> list[BreachInterval]:
    """Maximal runs of consecutive samples strictly above ``threshold``.

    Each sample covers ``[t, t + dt)``.
    """
    out = []
    start = None
    for k, v in enumerate(values):
        if v > threshold and start is None:
            start = k
        if start is not None and (v <= threshold or k == len(values) - 1):
            stop = k if v > threshold else k - 1
            behind = all(behind_flags[start:stop + 1]) if behind_flags is not None else False
            t0 = times[start]
            t1 = times[stop] + dt
            out.append(BreachInterval(name, t0, t1, max(values[start:stop + 1]), behind,
                                      (t1 - t0) <= grace))
            start = None
    return out


def evaluate_trace(trace, cfg: EvalConfig = EvalConfig()) -> dict:
    """Summarize a SimTrace: index maxima, final values, and breach intervals."""
    records = trace.records
    if not records:
        return {"max_sii": 0.0, "max_sgi": 0.0, "final_sii": 0.0, "final_sgi": 0.0, "final_sdi": 0.0,
                "breaches": []}
    times = [r.timestamp for r in records]
    sii = [r.hsci.sii for r in records]
    sgi = [r.hsci.sgi for r in records]
    behind = [_behind(r.robot.pose, r.scene) for r in records]
    breaches = (breach_intervals(times, sii, trace.dt, cfg.comfort_threshold, behind, "sii", cfg.transient_grace)
                + breach_intervals(times, sgi, trace.dt, cfg.comfort_threshold, behind, "sgi",
                                   cfg.transient_grace))
    last = records[-1].hsci
    return {
        "max_sii": max(sii),
        "max_sgi": max(sgi),
        "final_sii": last.sii,
        "final_sgi": last.sgi,
        "final_sdi": last.sdi,
        "breaches": breaches,
    }


# -- perimeter comparison -----------------------------------------------------

@dataclass(frozen=True)
class GroupPerimeter:
    situation_id: str
    group_id: str
    size: int
    baseline: float
    adapted: float
    params_changed: bool = False

    @property
    def increase_pct(self) -> float | None:
        if self.baseline == 0:
            return None
        return 100.0 * (self.adapted - self.baseline) / self.baseline


def _pct(adapted: float, baseline: float) -> float:
    if baseline == 0:
        return 0.0 if adapted == 0 else math.inf
    return 100.0 * (adapted - baseline) / baseline


@dataclass
class PerimeterReport:
    s_r: float
    s_h: float
    groups: list[GroupPerimeter] = field(default_factory=list)

    @property
    def total_baseline(self) -> float:
        return sum(g.baseline for g in self.groups)

    @property
    def total_adapted(self) -> float:
        return sum(g.adapted for g in self.groups)

    @property
    def increase_pct(self) -> float:
        return _pct(self.total_adapted, self.total_baseline)

    def by_size(self) -> dict[int, dict]:
        """Sums and percentage increase of the perimeter sums, per group size."""
        acc: dict[int, list[GroupPerimeter]] = defaultdict(list)
        for g in self.groups:
            acc[g.size].append(g)
        out = {}
        for size in sorted(acc):
            b = sum(g.baseline for g in acc[size])
            a = sum(g.adapted for g in acc[size])
            out[size] = {"count": len(acc[size]), "baseline": b, "adapted": a, "increase_pct": _pct(a, b),
                         "baseline_per_member": b / size, "adapted_per_member": a / size}
        return out


def load_dataset(path) -> list[tuple[str, SceneState]]:
    """Read situations from CSV with columns situation_id, person_id, x, y, theta, group_id."""
    rows: dict[str, list[dict]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = {"situation_id", "person_id", "x", "y", "theta", "group_id"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"dataset is missing columns: {sorted(missing)}")
        for row in reader:
            rows.setdefault(row["situation_id"], []).append(row)
    scenes = []
    for sid, items in rows.items():
        persons = [PersonState(str(r["person_id"]), Pose2D(float(r["x"]), float(r["y"]), float(r["theta"])))
                   for r in items]
        by_id = {p.id: p for p in persons}
        members: dict[str, list[PersonState]] = {}
        for r in items:
            gid = (r["group_id"] or "").strip()
            if gid:
                members.setdefault(gid, []).append(by_id[str(r["person_id"])])
        groups = tuple(build_group(gid, ms) for gid, ms in members.items())
        scenes.append((sid, SceneState(tuple(persons), groups, 0.0)))
    return scenes


def write_dataset(path, situations: Iterable[tuple[str, SceneState]]):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["situation_id", "person_id", "x", "y", "theta", "group_id"])
        for sid, scene in situations:
            for p in scene.persons:
                g = scene.group_of(p.id)
                w.writerow([sid, p.id, repr(p.pose.x), repr(p.pose.y), repr(p.pose.theta), g.id if g else ""])


def local_grid(scene: SceneState, resolution: float, margin: float = 3.0) -> GridSpec:
    xs = [p.pose.x for p in scene.persons]
    ys = [p.pose.y for p in scene.persons]
    x0 = math.floor((min(xs) - margin) / resolution) * resolution
    y0 = math.floor((min(ys) - margin) / resolution) * resolution
    w = math.ceil((max(xs) + margin - x0) / resolution)
    h = math.ceil((max(ys) + margin - y0) / resolution)
    return GridSpec((x0, y0), resolution, w, h)


def situation_perimeters(scene: SceneState, sid: str, adapt_cfg: AdaptationConfig, approach_cfg: ApproachConfig,
                         resolution: float = 0.05) -> list[GroupPerimeter]:
    if not scene.groups:
        return []
    spec = local_grid(scene, resolution)
    adapted = scene
    for g in scene.groups:
        adapted = adapt_group(adapted, g.id, adapt_cfg)
    base_map = apply_adaptive_layer(Costmap.empty(spec), scene)
    adapted_map = apply_adaptive_layer(Costmap.empty(spec), adapted)
    out = []
    for g in scene.groups:
        changed = any(scene.person(m).params != adapted.person(m).params for m in g.members)
        out.append(GroupPerimeter(sid, g.id, len(g.members),
                                  approach_perimeter(base_map, g, approach_cfg),
                                  approach_perimeter(adapted_map, g, approach_cfg), changed))
    return out


def compare_perimeters(dataset: Sequence[tuple[str, SceneState]], baseline_cfg: ApproachConfig,
                       adapted_cfg: AdaptationConfig, s_r_values: Sequence[float] = (0.45, 0.8),
                       s_h_values: Sequence[float] = (0.225, 0.3, 0.375, 0.45),
                       resolution: float = 0.05) -> list[PerimeterReport]:
    """Baseline versus adapted approach perimeter for every group, per sweep point."""
    reports = []
    for s_r in s_r_values:
        for s_h in s_h_values:
            acfg = replace(adapted_cfg, s_r=s_r, s_h=s_h)
            pcfg = replace(baseline_cfg, robot_width=s_r)
            rep = PerimeterReport(s_r, s_h)
            for sid, scene in dataset:
                rep.groups.extend(situation_perimeters(scene, sid, acfg, pcfg, resolution))
            reports.append(rep)
    return reports


def ring_group(gid: str, n: int, radius: float, center=(0.0, 0.0), phase: float = 0.0,
               prefix: str = "p") -> list[PersonState]:
    """``n`` persons evenly spaced on a circle, each facing the center."""
    out = []
    for m in range(n):
        a = phase + 2.0 * math.pi * m / n
        out.append(PersonState(f"{prefix}{m}", Pose2D(center[0] + radius * math.cos(a),
                                                      center[1] + radius * math.sin(a), a + math.pi)))
    return out


def synthetic_dataset(n_groups: int = 300, seed: int = 0, sizes: Sequence[int] = (2, 3, 4, 5),
                      spacing: tuple[float, float] = (0.7, 1.2), angle_noise: float = 0.05,
                      heading_noise: float = 0.1) -> list[tuple[str, SceneState]]:
    """Randomized circular conversation groups, one per situation.

    Neighbouring members stand ``spacing`` meters apart (uniform draw),
    which fixes the ring radius for the drawn size.  Positions and headings
    get small Gaussian perturbations so groups are not perfectly regular.
    """
    rng = random.Random(seed)
    data = []
    for k in range(n_groups):
        n = rng.choice(list(sizes))
        gap = rng.uniform(*spacing)
        radius = gap / (2.0 * math.sin(math.pi / n))
        phase = rng.uniform(0.0, 2.0 * math.pi)
        persons = []
        for m in range(n):
            a = phase + 2.0 * math.pi * m / n + rng.gauss(0.0, angle_noise)
            persons.append(PersonState(f"p{m}", Pose2D(radius * math.cos(a), radius * math.sin(a),
                                                       a + math.pi + rng.gauss(0.0, heading_noise))))
        data.append((f"s{k:03d}", SceneState(tuple(persons), (build_group("g0", persons),))))
    return data
