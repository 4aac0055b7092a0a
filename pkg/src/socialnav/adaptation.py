"""Adaptation of personal and group space parameters.

Three independent adjustments, composed per tick by :func:`adapt_scene`:

* approach-target shrink of a lone person's frontal deviation,
* lateral shrink of group members so a robot of width ``s_r`` fits
  between neighbours,
* frontal growth with walking speed, attenuated near the robot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .field import GaussianParams, PersonState, Pose2D, SceneState, rebuild_groups, wrap_angle

INTIMATE_RADIUS = 0.45
HALF_HUMAN_WIDTH = 0.225


@dataclass(frozen=True)
class AdaptationConfig:
    zeta: float = 0.3
    s_h: float = 0.375
    s_r: float = 0.8
    intimate_radius: float = INTIMATE_RADIUS
    half_human_width: float = HALF_HUMAN_WIDTH
    orientation_diff_bounds: tuple[float, float] = (math.pi / 4, 3 * math.pi / 4)

    def __post_init__(self):
        errors = []
        if self.zeta < 0:
            errors.append("zeta must be >= 0")
        if self.s_h < self.half_human_width:
            errors.append("s_h must be >= half_human_width")
        if self.s_r <= 0:
            errors.append("s_r must be > 0")
        lo, hi = self.orientation_diff_bounds
        if not lo < hi:
            errors.append("orientation_diff_bounds must satisfy min < max")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class VelocityAdaptConfig:
    a_adapt: float = 1.5
    a_limit: float = 1.0
    d_limit: float = 6.0

    def __post_init__(self):
        if min(self.a_adapt, self.a_limit, self.d_limit) < 0:
            raise ValueError("velocity adaptation parameters must be >= 0")


def adapt_individual_target(params: GaussianParams, cfg: AdaptationConfig) -> GaussianParams:
    shrunk = max(cfg.intimate_radius, params.sigma_f - cfg.zeta)
    return replace(params, sigma_f=min(params.sigma_f, shrunk))


def _offset(pose: Pose2D, angle: float, dist: float) -> tuple[float, float]:
    return (pose.x + dist * math.cos(angle), pose.y + dist * math.sin(angle))


def side_anchor_points(person: PersonState, left_neighbor: Pose2D | None, right_neighbor: Pose2D | None,
                       s_h: float):
    """Clearance points beside a person and beside each facing neighbour.

    Returns ``(a_left, a_right, a_left_adj, a_right_adj)``.  The left
    neighbour contributes its right-side point and vice versa, so each pair
    brackets the gap between two members.  Missing neighbours give ``None``.
    """
    p = person.pose
    a_left = _offset(p, p.theta + math.pi / 2, s_h)
    a_right = _offset(p, p.theta - math.pi / 2, s_h)
    a_left_adj = None if left_neighbor is None else _offset(left_neighbor, left_neighbor.theta - math.pi / 2, s_h)
    a_right_adj = None if right_neighbor is None else _offset(right_neighbor, right_neighbor.theta + math.pi / 2, s_h)
    return a_left, a_right, a_left_adj, a_right_adj


def _side_deviation(person: Pose2D, neighbor: Pose2D, anchor, anchor_adj, sigma: float,
                    cfg: AdaptationConfig) -> float:
    gx = anchor_adj[0] - anchor[0]
    gy = anchor_adj[1] - anchor[1]
    gap = math.hypot(gx, gy)
    if gap == 0.0 or gap < cfg.s_r:
        return sigma
    lo, hi = cfg.orientation_diff_bounds
    if not lo <= abs(wrap_angle(person.theta - neighbor.theta)) <= hi:
        return sigma
    # Robot centred in the gap: its near edge sits (gap - s_r)/2 past our anchor.
    shift = (gap - cfg.s_r) / 2.0
    bx = anchor[0] + shift * gx / gap
    by = anchor[1] + shift * gy / gap
    # Distance from the person to the projection of B onto their lateral axis.
    ux, uy = -math.sin(person.theta), math.cos(person.theta)
    d_aux = abs((bx - person.x) * ux + (by - person.y) * uy)
    return max(min(sigma, d_aux), cfg.half_human_width)


def adapt_group_member(person: PersonState, left: PersonState | None, right: PersonState | None,
                       cfg: AdaptationConfig) -> GaussianParams:
    a_left, a_right, a_left_adj, a_right_adj = side_anchor_points(
        person,
        None if left is None else left.pose,
        None if right is None else right.pose,
        cfg.s_h,
    )
    params = person.params
    sl, sr = params.sigma_sl, params.sigma_sr
    if left is not None:
        sl = _side_deviation(person.pose, left.pose, a_left, a_left_adj, sl, cfg)
    if right is not None:
        sr = _side_deviation(person.pose, right.pose, a_right, a_right_adj, sr, cfg)
    return replace(params, sigma_sl=sl, sigma_sr=sr)


def _lateral(person: PersonState, other: PersonState) -> float:
    p = person.pose
    return math.cos(p.theta) * (other.pose.y - p.y) - math.sin(p.theta) * (other.pose.x - p.x)


def member_neighbors(scene: SceneState, group_id: str) -> dict[str, tuple[str | None, str | None]]:
    """Map each member id to its ``(left, right)`` neighbour ids.

    Adjacency follows the polar order stored in the group; which adjacent
    member is "left" is decided by the side of the person it lies on.
    """
    g = scene.group(group_id)
    ids = list(g.members)
    n = len(ids)
    out: dict[str, tuple[str | None, str | None]] = {}
    if n < 2:
        return {i: (None, None) for i in ids}
    for k, pid in enumerate(ids):
        me = scene.person(pid)
        if n == 2:
            other = scene.person(ids[1 - k])
            out[pid] = (other.id, None) if _lateral(me, other) > 0 else (None, other.id)
            continue
        prev = scene.person(ids[k - 1])
        nxt = scene.person(ids[(k + 1) % n])
        if _lateral(me, nxt) >= _lateral(me, prev):
            out[pid] = (nxt.id, prev.id)
        else:
            out[pid] = (prev.id, nxt.id)
    return out


def adapt_group(scene: SceneState, group_id: str, cfg: AdaptationConfig) -> SceneState:
    g = scene.group(group_id)
    if len(g.members) < 2:
        return scene
    neighbors = member_neighbors(scene, group_id)
    updated = {}
    for pid, (lid, rid) in neighbors.items():
        me = scene.person(pid)
        left = None if lid is None else scene.person(lid)
        right = None if rid is None else scene.person(rid)
        updated[pid] = replace(me, params=adapt_group_member(me, left, right, cfg))
    return scene.with_persons([updated.get(p.id, p) for p in scene.persons])


def distance_modifier(d: float, d_limit: float) -> float:
    if d > d_limit:
        return 1.0
    if d_limit == 0:
        return 1.0
    return min(1.0, 2.0 * d / d_limit)


def adapt_velocity(sigma_f: float, speed: float, robot_distance: float, cfg: VelocityAdaptConfig) -> float:
    d_mod = distance_modifier(robot_distance, cfg.d_limit)
    return min(sigma_f + cfg.a_limit, sigma_f * (1.0 + d_mod * cfg.a_adapt * speed))


def adapt_scene(scene: SceneState, robot_xy: tuple[float, float] | None, target_id: str | None,
                cfg: AdaptationConfig, vcfg: VelocityAdaptConfig, *,
                velocity: bool = True, arrangement: bool = True) -> SceneState:
    """Apply the per-tick adaptation pipeline to a baseline scene.

    Order: velocity growth, group lateral shrink, then the frontal shrink of
    a lone approach target.  ``scene`` must carry baseline parameters; the
    result never feeds back into the next tick.
    """
    scene = rebuild_groups(scene)
    if velocity and robot_xy is not None:
        persons = []
        for p in scene.persons:
            d = math.hypot(p.pose.x - robot_xy[0], p.pose.y - robot_xy[1])
            sf = adapt_velocity(p.params.sigma_f, p.speed, d, vcfg)
            persons.append(replace(p, params=replace(p.params, sigma_f=sf)))
        groups = []
        for g in scene.groups:
            d = math.hypot(g.center[0] - robot_xy[0], g.center[1] - robot_xy[1])
            sf = adapt_velocity(g.params.sigma_f, g.speed, d, vcfg)
            groups.append(replace(g, params=replace(g.params, sigma_f=sf)))
        scene = replace(scene, persons=tuple(persons), groups=tuple(groups))
    if arrangement:
        for g in scene.groups:
            scene = adapt_group(scene, g.id, cfg)
        if target_id is not None and _is_lone_person(scene, target_id):
            persons = [replace(p, params=adapt_individual_target(p.params, cfg)) if p.id == target_id else p
                       for p in scene.persons]
            scene = scene.with_persons(persons)
    return scene


def _is_lone_person(scene: SceneState, target_id: str) -> bool:
    return any(p.id == target_id for p in scene.persons) and scene.group_of(target_id) is None
