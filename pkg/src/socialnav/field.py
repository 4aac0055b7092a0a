"""Personal and group space models.

A person (or group) is described by a pose and five Gaussian parameters:
amplitude plus four standard deviations (front, rear, left, right).  The
space value at a point is the altered asymmetric Gaussian of the nearest
quadrant; the scene value is the max over every person and group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

LETHAL_COST = 254
DEFAULT_AMPLITUDE = 211.0

# Person baseline deviations in meters, used when a scene file gives none.
DEFAULT_SIGMA_FRONT = 1.2
DEFAULT_SIGMA_REAR = 0.5
DEFAULT_SIGMA_SIDE = 0.4

# Group deviations scale with the group radius.
GROUP_SIGMA_RATIO = 1.0
MIN_GROUP_SIGMA = 0.05


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class GaussianParams:
    amplitude: float = DEFAULT_AMPLITUDE
    sigma_f: float = DEFAULT_SIGMA_FRONT
    sigma_r: float = DEFAULT_SIGMA_REAR
    sigma_sl: float = DEFAULT_SIGMA_SIDE
    sigma_sr: float = DEFAULT_SIGMA_SIDE

    def __post_init__(self):
        sigmas = (self.sigma_f, self.sigma_r, self.sigma_sl, self.sigma_sr)
        if not all(s > 0 and math.isfinite(s) for s in sigmas):
            raise ValueError(f"standard deviations must be positive and finite, got {sigmas}")
        if not 0 <= self.amplitude <= LETHAL_COST:
            raise ValueError(f"amplitude must lie in [0, {LETHAL_COST}], got {self.amplitude}")

    @property
    def max_sigma(self) -> float:
        return max(self.sigma_f, self.sigma_r, self.sigma_sl, self.sigma_sr)


@dataclass(frozen=True)
class PersonState:
    id: str
    pose: Pose2D
    velocity: tuple[float, float] = (0.0, 0.0)
    params: GaussianParams = field(default_factory=GaussianParams)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.velocity):
            raise ValueError(f"person {self.id}: velocity must be finite")

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class GroupState:
    id: str
    center: tuple[float, float]
    radius: float
    orientation: float
    members: tuple[str, ...]
    params: GaussianParams
    velocity: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"group {self.id}: negative radius")
        if self.params.sigma_sl != self.params.sigma_sr:
            raise ValueError(f"group {self.id}: side deviations must be equal")

    @property
    def pose(self) -> Pose2D:
        return Pose2D(self.center[0], self.center[1], self.orientation)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class SceneState:
    persons: tuple[PersonState, ...] = ()
    groups: tuple[GroupState, ...] = ()
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "persons", tuple(self.persons))
        object.__setattr__(self, "groups", tuple(self.groups))
        ids = [p.id for p in self.persons]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate person ids")
        known = set(ids)
        seen: set[str] = set()
        for g in self.groups:
            for m in g.members:
                if m not in known:
                    raise ValueError(f"group {g.id}: unknown member {m}")
                if m in seen:
                    raise ValueError(f"person {m} belongs to more than one group")
                seen.add(m)

    def person(self, pid: str) -> PersonState:
        for p in self.persons:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def group(self, gid: str) -> GroupState:
        for g in self.groups:
            if g.id == gid:
                return g
        raise KeyError(gid)

    def group_of(self, pid: str) -> GroupState | None:
        for g in self.groups:
            if pid in g.members:
                return g
        return None

    def with_persons(self, persons: Sequence[PersonState]) -> "SceneState":
        return replace(self, persons=tuple(persons))


def altered_asymmetric_gaussian(x: float, y: float, center: Pose2D, params: GaussianParams) -> float:
    dx = x - center.x
    dy = y - center.y
    alpha = wrap_angle(math.atan2(dy, dx) - center.theta)
    sx = params.sigma_f if abs(alpha) < math.pi / 2 else params.sigma_r
    sy = params.sigma_sr if alpha < 0 else params.sigma_sl
    d = math.sqrt(dx * dx + dy * dy)
    a = d * math.cos(alpha) / (2.0 * sx)
    b = d * math.sin(alpha) / (2.0 * sy)
    return params.amplitude * math.exp(-(a * a + b * b))


def merged_personal_field(scene: SceneState, x: float, y: float) -> float:
    return max((altered_asymmetric_gaussian(x, y, p.pose, p.params) for p in scene.persons), default=0.0)


def merged_group_field(scene: SceneState, x: float, y: float) -> float:
    return max((altered_asymmetric_gaussian(x, y, g.pose, g.params) for g in scene.groups), default=0.0)


def global_field(scene: SceneState, x: float, y: float) -> float:
    return max(merged_personal_field(scene, x, y), merged_group_field(scene, x, y))


def circular_mean(angles: Sequence[float]) -> float:
    s = sum(math.sin(a) for a in angles)
    c = sum(math.cos(a) for a in angles)
    if abs(s) < 1e-12 and abs(c) < 1e-12:
        return 0.0
    return math.atan2(s, c)


def group_params_for_radius(radius: float, amplitude: float = DEFAULT_AMPLITUDE) -> GaussianParams:
    s = max(MIN_GROUP_SIGMA, GROUP_SIGMA_RATIO * radius)
    return GaussianParams(amplitude, s, s, s, s)


def build_group(gid: str, members: Sequence[PersonState], params: GaussianParams | None = None) -> GroupState:
    """Derive center, radius, orientation and velocity of a group from its members.

    Members are stored in counter-clockwise polar order around the center.
    The orientation is the mean heading of member velocities; a group at
    rest falls back to the circular mean of the members' body orientations.
    """
    if not members:
        raise ValueError(f"group {gid} has no members")
    n = len(members)
    cx = sum(p.pose.x for p in members) / n
    cy = sum(p.pose.y for p in members) / n
    radius = sum(math.hypot(p.pose.x - cx, p.pose.y - cy) for p in members) / n
    vx = sum(p.velocity[0] for p in members) / n
    vy = sum(p.velocity[1] for p in members) / n
    moving = [p for p in members if p.speed > 1e-9]
    if moving:
        orientation = circular_mean([math.atan2(p.velocity[1], p.velocity[0]) for p in moving])
    else:
        orientation = circular_mean([p.pose.theta for p in members])
    ordered = sorted(members, key=lambda p: (math.atan2(p.pose.y - cy, p.pose.x - cx), p.id))
    if params is None:
        params = group_params_for_radius(radius)
    return GroupState(
        id=gid,
        center=(cx, cy),
        radius=radius,
        orientation=orientation,
        members=tuple(p.id for p in ordered),
        params=params,
        velocity=(vx, vy),
    )


def rebuild_groups(scene: SceneState) -> SceneState:
    """Recompute every group's geometry from the current member states."""
    groups = []
    for g in scene.groups:
        members = [scene.person(m) for m in g.members]
        groups.append(build_group(g.id, members, group_params_for_radius(
            _mean_radius(members), g.params.amplitude)))
    return replace(scene, groups=tuple(groups))


def _mean_radius(members: Sequence[PersonState]) -> float:
    n = len(members)
    cx = sum(p.pose.x for p in members) / n
    cy = sum(p.pose.y for p in members) / n
    return sum(math.hypot(p.pose.x - cx, p.pose.y - cy) for p in members) / n


def scene_from_dict(doc: dict, default_params: GaussianParams | None = None) -> SceneState:
    base = default_params or GaussianParams()
    persons = []
    for item in doc.get("persons", []):
        overrides = {k: float(item[k]) for k in
                     ("amplitude", "sigma_f", "sigma_r", "sigma_sl", "sigma_sr") if k in item}
        persons.append(PersonState(
            id=str(item["id"]),
            pose=Pose2D(float(item["x"]), float(item["y"]), float(item.get("theta", 0.0))),
            velocity=(float(item.get("vx", 0.0)), float(item.get("vy", 0.0))),
            params=replace(base, **overrides),
        ))
    by_id = {p.id: p for p in persons}
    groups = []
    for item in doc.get("groups", []):
        try:
            members = [by_id[str(m)] for m in item["members"]]
        except KeyError as exc:
            raise ValueError(f"group {item.get('id')}: unknown member {exc.args[0]}") from None
        groups.append(build_group(str(item["id"]), members,
                                  group_params_for_radius(_mean_radius(members), base.amplitude)))
    return SceneState(tuple(persons), tuple(groups), float(doc.get("timestamp", 0.0)))


def scene_to_dict(scene: SceneState) -> dict:
    persons = []
    for p in scene.persons:
        persons.append({
            "id": p.id, "x": p.pose.x, "y": p.pose.y, "theta": p.pose.theta,
            "vx": p.velocity[0], "vy": p.velocity[1],
            "amplitude": p.params.amplitude,
            "sigma_f": p.params.sigma_f, "sigma_r": p.params.sigma_r,
            "sigma_sl": p.params.sigma_sl, "sigma_sr": p.params.sigma_sr,
        })
    groups = [{"id": g.id, "members": list(g.members)} for g in scene.groups]
    return {"timestamp": scene.timestamp, "persons": persons, "groups": groups}


def load_scene(path, default_params: GaussianParams | None = None) -> SceneState:
    with open(path) as f:
        return scene_from_dict(json.load(f), default_params)
