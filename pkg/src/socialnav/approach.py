"""Approach pose estimation around a target person or group.

The estimator samples the costmap on a circle around the target, groups
free samples into contiguous zones, keeps the part of each zone inside the
common field of view of the target's members, drops zones too narrow for
the robot, and grows the circle until something survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .costmap import INSCRIBED, Costmap
from .field import Pose2D, SceneState, wrap_angle


@dataclass(frozen=True)
class ApproachConfig:
    free_threshold: int = 180
    initial_radius_person: float | None = None
    step: float = 0.1
    d_a_limit: float = 6.0
    a_a_adapt: float = 1.5
    a_a_limit: float = 1.2
    v_mod: float = 10.0
    f_ifov: float = math.pi / 2
    f_mod: float = 1.1
    max_radius: float | None = None
    max_radius_factor: float = 1.5
    track_threshold: float = 1.0
    robot_width: float = 0.8
    min_samples: int = 64

    def __post_init__(self):
        errors = []
        if not self.step > 0:
            errors.append("step must be > 0")
        if not self.f_mod > 0:
            errors.append("f_mod must be > 0")
        if not 0 < self.free_threshold <= 255:
            errors.append("free_threshold must lie in (0, 255]")
        if self.max_radius is not None and not self.max_radius > 0:
            errors.append("max_radius must be > 0")
        if not self.max_radius_factor > 0:
            errors.append("max_radius_factor must be > 0")
        if not self.track_threshold > 0:
            errors.append("track_threshold must be > 0")
        if self.robot_width < 0:
            errors.append("robot_width must be >= 0")
        if min(self.d_a_limit, self.a_a_adapt, self.a_a_limit, self.v_mod) < 0:
            errors.append("velocity adaptation parameters must be >= 0")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class Sample:
    index: int
    x: float
    y: float
    angle: float
    cost: int | None
    free: bool


@dataclass(frozen=True)
class ApproachZone:
    samples: tuple[Sample, ...]
    n_total: int
    radius: float
    zone_id: int = 0

    @property
    def width(self) -> float:
        """Distance between the two farthest samples of the zone.

        Samples are evenly spaced on one circle, so the farthest pair is the
        one whose index separation is closest to half the circle.
        """
        k = len(self.samples) - 1
        if k < 1:
            return 0.0
        m = min(k, self.n_total // 2)
        a, b = self.samples[0], self.samples[m]
        return math.hypot(a.x - b.x, a.y - b.y)

    @property
    def arc_length(self) -> float:
        return len(self.samples) * 2.0 * math.pi * self.radius / self.n_total


@dataclass(frozen=True)
class ApproachPose:
    x: float
    y: float
    heading: float
    radius_used: float
    zone_id: int
    fov_fallback: bool = False

    @property
    def pose(self) -> Pose2D:
        return Pose2D(self.x, self.y, self.heading)


@dataclass
class Target:
    id: str
    center: tuple[float, float]
    members: list[Pose2D]
    speed: float
    radius: float | None = None  # group radius; None for a lone person


def n_samples_for(radius: float, resolution: float, minimum: int = 64) -> int:
    return max(minimum, math.ceil(2.0 * math.pi * radius / resolution))


def sample_circumference(costmap: Costmap, center, radius: float, n_samples: int,
                         free_threshold: int = 180) -> list[Sample]:
    if not radius > 0:
        raise ValueError("radius must be > 0")
    out = []
    for k in range(n_samples):
        a = 2.0 * math.pi * k / n_samples
        x = center[0] + radius * math.cos(a)
        y = center[1] + radius * math.sin(a)
        c = costmap.cost_at(x, y)
        free = c is not None and c < free_threshold and c < INSCRIBED
        out.append(Sample(k, x, y, a, c, free))
    return out


def _runs(indices: list[int], n: int) -> list[list[int]]:
    """Split sorted sample indices into runs contiguous modulo ``n``."""
    if not indices:
        return []
    if len(indices) == n:
        return [list(indices)]
    runs = [[indices[0]]]
    for k in indices[1:]:
        if k == runs[-1][-1] + 1:
            runs[-1].append(k)
        else:
            runs.append([k])
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n - 1:
        runs[0] = runs.pop() + runs[0]
    return runs


def extract_zones(samples: list[Sample], radius: float | None = None) -> list[ApproachZone]:
    n = len(samples)
    if n == 0:
        return []
    if radius is None:
        s0 = samples[0]
        radius = math.hypot(s0.x - samples[n // 2].x, s0.y - samples[n // 2].y) / 2.0
    runs = _runs([s.index for s in samples if s.free], n)
    return [ApproachZone(tuple(samples[k] for k in run), n, radius, zone_id=i) for i, run in enumerate(runs)]


def _split_zone(zone: ApproachZone, keep: list[Sample]) -> list[ApproachZone]:
    """Re-split the kept samples of a zone into contiguous pieces."""
    if not keep:
        return []
    pieces = [[keep[0]]]
    for s in keep[1:]:
        if (s.index - pieces[-1][-1].index) % zone.n_total == 1:
            pieces[-1].append(s)
        else:
            pieces.append([s])
    if len(pieces) > 1 and (pieces[0][0].index - pieces[-1][-1].index) % zone.n_total == 1:
        pieces[0] = pieces.pop() + pieces[0]
    return [ApproachZone(tuple(p), zone.n_total, zone.radius, zone.zone_id) for p in pieces]


def in_view(member: Pose2D, x: float, y: float, fov: float) -> bool:
    bearing = math.atan2(y - member.y, x - member.x)
    return abs(wrap_angle(bearing - member.theta)) <= fov / 2.0


def target_of(scene: SceneState, target_id: str) -> Target:
    for g in scene.groups:
        if g.id == target_id:
            return Target(g.id, g.center, [scene.person(m).pose for m in g.members], g.speed, g.radius)
    p = scene.person(target_id)
    return Target(p.id, p.pose.xy, [p.pose], p.speed, None)


def filter_fov(zones: list[ApproachZone], scene: SceneState, target_id: str, fov: float):
    """Keep zone samples seen by every target member.

    Returns ``(zones, fallback)``; when nothing survives the original zones
    come back unchanged with ``fallback`` set.
    """
    members = target_of(scene, target_id).members
    out = []
    for z in zones:
        keep = [s for s in z.samples if all(in_view(m, s.x, s.y, fov) for m in members)]
        out.extend(_split_zone(z, keep))
    if not out:
        return list(zones), True
    return out, False


def filter_width(zones: list[ApproachZone], s_r: float) -> list[ApproachZone]:
    return [z for z in zones if z.width >= s_r]


def narrowed_fov(cfg: ApproachConfig, approach_radius: float, group_radius: float) -> float:
    fov = cfg.f_ifov / (cfg.f_mod * approach_radius / group_radius)
    return min(fov, cfg.f_ifov)


def velocity_scaled_step(cfg: ApproachConfig, v_mag: float) -> float:
    return max(cfg.step, cfg.step * v_mag * cfg.v_mod)


def expanded_radius_limit(cfg: ApproachConfig, v_mag: float, robot_distance: float,
                          max_radius: float | None = None) -> float:
    base = cfg.max_radius if max_radius is None else max_radius
    if base is None:
        raise ValueError("no maximum radius configured")
    if robot_distance > cfg.d_a_limit or cfg.d_a_limit == 0:
        d_mod = 1.0
    else:
        d_mod = min(1.0, 2.0 * robot_distance / cfg.d_a_limit)
    return min(base + cfg.a_a_limit, base * (1.0 + d_mod * cfg.a_a_adapt * v_mag))


def _zone_dump(z: ApproachZone) -> dict:
    return {"zone_id": z.zone_id, "width": z.width, "n": len(z.samples),
            "start_angle": z.samples[0].angle, "end_angle": z.samples[-1].angle}


def estimate_approach_pose(costmap: Costmap, scene: SceneState, target_id: str, robot_pose: Pose2D,
                           cfg: ApproachConfig, *, adaptive: bool = True,
                           initial_radius: float | None = None,
                           log: list | None = None) -> ApproachPose | None:
    """Search outward from the target for the nearest safe approach pose.

    ``adaptive`` enables the velocity-aware parts: a step scaled by target
    speed, a raised radius limit, and a field of view narrowing with
    distance.  Returns None when every radius up to the limit is blocked.
    Per-radius diagnostics are appended to ``log`` when given.
    """
    target = target_of(scene, target_id)
    if initial_radius is None:
        if target.radius is not None:
            initial_radius = target.radius
        elif cfg.initial_radius_person is not None:
            initial_radius = cfg.initial_radius_person
        else:
            initial_radius = scene.person(target_id).params.sigma_f
    r0 = max(initial_radius, costmap.spec.resolution)
    max_radius = cfg.max_radius if cfg.max_radius is not None else cfg.max_radius_factor * r0
    cx, cy = target.center
    dist = math.hypot(robot_pose.x - cx, robot_pose.y - cy)
    if adaptive:
        limit = expanded_radius_limit(cfg, target.speed, dist, max_radius)
        step = velocity_scaled_step(cfg, target.speed)
    else:
        limit = max_radius
        step = cfg.step
    k = 0
    while True:
        radius = r0 + k * step
        if radius > limit + 1e-9:
            return None
        k += 1
        fov = narrowed_fov(cfg, radius, r0) if adaptive else cfg.f_ifov
        n = n_samples_for(radius, costmap.spec.resolution, cfg.min_samples)
        samples = sample_circumference(costmap, (cx, cy), radius, n, cfg.free_threshold)
        zones = extract_zones(samples, radius)
        in_fov, fallback = filter_fov(zones, scene, target_id, fov)
        valid = filter_width(in_fov, cfg.robot_width)
        if log is not None:
            log.append({"radius": radius, "fov": fov, "n_samples": n,
                        "n_free": sum(s.free for s in samples),
                        "zones": [_zone_dump(z) for z in zones],
                        "fov_zones": [_zone_dump(z) for z in in_fov],
                        "fov_fallback": fallback,
                        "valid_zones": [_zone_dump(z) for z in valid]})
        if not valid:
            continue
        best = None
        for z in valid:
            for s in z.samples:
                d = math.hypot(s.x - robot_pose.x, s.y - robot_pose.y)
                key = (d, s.index)
                if best is None or key < best[0]:
                    best = (key, s, z)
        _, s, z = best
        heading = math.atan2(cy - s.y, cx - s.x)
        return ApproachPose(s.x, s.y, wrap_angle(heading), radius, z.zone_id, fallback)


def track_target(scene: SceneState, last_center, track_threshold: float) -> str | None:
    """Re-identify the target as the nearest group or lone person to its last center.

    Group members are represented by their group.  Returns None when the
    nearest candidate is farther than ``track_threshold``.
    """
    candidates = [(g.id, g.center) for g in scene.groups]
    candidates += [(p.id, p.pose.xy) for p in scene.persons if scene.group_of(p.id) is None]
    best = None
    for cid, c in candidates:
        d = math.hypot(c[0] - last_center[0], c[1] - last_center[1])
        if best is None or d < best[0]:
            best = (d, cid)
    if best is None or best[0] > track_threshold:
        return None
    return best[1]


def approach_perimeter(costmap: Costmap, group, cfg: ApproachConfig) -> float:
    """Total arc length of free zones wide enough for the robot at the group radius."""
    radius = max(group.radius, costmap.spec.resolution)
    n = n_samples_for(radius, costmap.spec.resolution, cfg.min_samples)
    samples = sample_circumference(costmap, group.center, radius, n, cfg.free_threshold)
    return sum(z.arc_length for z in filter_width(extract_zones(samples, radius), cfg.robot_width))
