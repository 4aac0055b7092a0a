"""Deterministic fixed-timestep simulator.

Scripted humans walk at constant velocity and halt for good once the robot
comes within their stop distance (or once they have covered their travel
limit).  The robot replans an approach pose on a fixed cadence, plans a
grid path to it with A*, and tracks the path with a pure-pursuit style
controller that respects velocity and acceleration limits.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import kernels
from .adaptation import AdaptationConfig, VelocityAdaptConfig, adapt_scene
from .approach import ApproachConfig, ApproachPose, estimate_approach_pose, target_of, track_target
from .costmap import INSCRIBED, LETHAL, Costmap, GridSpec, LayerStack, compose, rasterize_static
from .evaluation import EvalConfig, HsciSample, compute_sdi, compute_sgi, compute_sii
from .field import PersonState, Pose2D, SceneState, rebuild_groups, scene_from_dict, scene_to_dict, wrap_angle

EVENT_REPLANNED = "pose-replanned"
EVENT_NO_POSE = "no-valid-pose"
EVENT_TARGET_LOST = "target-lost"
EVENT_PLAN_FAILED = "plan-failed"
EVENT_GOAL = "goal-reached"
EVENT_TIMEOUT = "timeout"


@dataclass(frozen=True)
class AlgorithmFlags:
    """Which adaptations are active in one run.

    ``space_adapt`` grows frontal deviations with walking speed,
    ``approach_adapt`` enables the velocity-aware approach search, and
    ``arrangement_adapt`` enables the group lateral shrink and the frontal
    shrink of a lone target.
    """

    name: str
    space_adapt: bool
    approach_adapt: bool
    arrangement_adapt: bool = True


PRESETS = {
    "i": AlgorithmFlags("i", False, False),
    "ii": AlgorithmFlags("ii", False, True),
    "iii": AlgorithmFlags("iii", True, False),
    "iv": AlgorithmFlags("iv", True, True),
    "non_adapted": AlgorithmFlags("non_adapted", False, False, False),
    "adapted": AlgorithmFlags("adapted", True, True, True),
}


def flags_from(item) -> AlgorithmFlags:
    if isinstance(item, str):
        try:
            return PRESETS[item]
        except KeyError:
            raise ValueError(f"unknown configuration preset {item!r}; known: {sorted(PRESETS)}") from None
    return AlgorithmFlags(str(item.get("name", "custom")), bool(item["space_adapt"]), bool(item["approach_adapt"]),
                          bool(item.get("arrangement_adapt", True)))


@dataclass(frozen=True)
class AgentScript:
    person: str
    speed: float = 0.0
    heading: float | None = None  # defaults to the person's body orientation
    stop_distance: float = 0.0
    travel_limit: float | None = None

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"script for {self.person}: speed must be >= 0")
        if self.stop_distance < 0:
            raise ValueError(f"script for {self.person}: stop_distance must be >= 0")
        if self.travel_limit is not None and self.travel_limit < 0:
            raise ValueError(f"script for {self.person}: travel_limit must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    replan_period: float = 0.5
    v_max: float = 0.6
    w_max: float = 1.2
    a_max: float = 0.8
    lookahead: float = 0.3
    heading_gain: float = 2.0
    path_weight: float = 0.02
    goal_tolerance: float | None = None  # grid resolution when unset

    def __post_init__(self):
        errors = []
        for name in ("dt", "replan_period", "v_max", "w_max", "a_max", "lookahead", "heading_gain"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")
        if self.path_weight < 0:
            errors.append("path_weight must be >= 0")
        if self.goal_tolerance is not None and not self.goal_tolerance > 0:
            errors.append("goal_tolerance must be > 0")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def replan_every(self) -> int:
        return max(1, round(self.replan_period / self.dt))


@dataclass(frozen=True)
class Scenario:
    name: str
    scene: SceneState
    robot_start: Pose2D
    target: str
    scripts: tuple[AgentScript, ...] = ()
    configs: tuple[AlgorithmFlags, ...] = (PRESETS["iv"],)
    duration: float = 30.0
    dt: float = 0.1
    seed: int = 0
    map_file: str | None = None
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        errors = []
        if not self.dt > 0:
            errors.append("dt must be > 0")
        if not self.duration > 0:
            errors.append("duration must be > 0")
        ids = {p.id for p in self.scene.persons}
        for s in self.scripts:
            if s.person not in ids:
                errors.append(f"script references unknown person {s.person}")
        if errors:
            raise ValueError(f"scenario {self.name}: " + "; ".join(errors))


def load_scenario(path) -> Scenario:
    with open(path) as f:
        doc = json.load(f)
    base = os.path.dirname(os.path.abspath(path))
    return scenario_from_dict(doc, base)


def scenario_from_dict(doc: dict, base_dir: str = ".") -> Scenario:
    try:
        scene = scene_from_dict(doc["scene"])
        scripts = []
        for s in doc.get("scripts", []):
            scripts.append(AgentScript(str(s["person"]), float(s.get("speed", 0.0)),
                                       None if s.get("heading") is None else float(s["heading"]),
                                       float(s.get("stop_distance", 0.0)),
                                       None if s.get("travel_limit") is None else float(s["travel_limit"])))
        r = doc["robot"]
        map_file = doc.get("map")
        if map_file is not None and not os.path.isabs(map_file):
            map_file = os.path.join(base_dir, map_file)
        g = doc.get("grid", {})
        grid = GridSpec(tuple(g.get("origin", (0.0, 0.0))), float(g.get("resolution", 0.05)),
                        int(g.get("width", 200)), int(g.get("height", 200)))
        configs = tuple(flags_from(c) for c in doc.get("configs", ["iv"]))
        return Scenario(
            name=str(doc.get("name", "scenario")),
            scene=scene,
            robot_start=Pose2D(float(r["x"]), float(r["y"]), float(r.get("theta", 0.0))),
            target=str(doc["target"]),
            scripts=tuple(scripts),
            configs=configs,
            duration=float(doc.get("duration", 30.0)),
            dt=float(doc.get("dt", 0.1)),
            seed=int(doc.get("seed", 0)),
            map_file=map_file,
            grid=grid,
        )
    except KeyError as exc:
        raise ValueError(f"scenario is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    v: float = 0.0
    w: float = 0.0


# -- agents -------------------------------------------------------------------

@dataclass
class AgentStatus:
    travelled: float = 0.0
    halted: bool = False


def script_velocity(script: AgentScript, person: PersonState) -> tuple[float, float]:
    h = person.pose.theta if script.heading is None else script.heading
    return (script.speed * math.cos(h), script.speed * math.sin(h))


def initial_scene(scenario: Scenario) -> SceneState:
    """Scenario scene with scripted velocities filled in."""
    scripts = {s.person: s for s in scenario.scripts}
    persons = []
    for p in scenario.scene.persons:
        if p.id in scripts:
            p = replace(p, velocity=script_velocity(scripts[p.id], p))
        persons.append(p)
    return rebuild_groups(scenario.scene.with_persons(persons))


def step_agents(scenario: Scenario, scene: SceneState, robot: RobotState, dt: float,
                status: dict[str, AgentStatus] | None = None) -> SceneState:
    """Advance scripted persons by one tick.

    A person halts permanently once the robot is closer than its stop
    distance or once it has walked its travel limit, and the whole group
    halts with it; halting zeroes the velocity.  ``status`` carries the per-person bookkeeping across ticks and
    is updated in place.
    """
    if status is None:
        status = {}
    scripts = {s.person: s for s in scenario.scripts}
    for p in scene.persons:
        s = scripts.get(p.id)
        if s is None:
            continue
        st = status.setdefault(p.id, AgentStatus())
        if not st.halted:
            d = math.hypot(p.pose.x - robot.pose.x, p.pose.y - robot.pose.y)
            if d < s.stop_distance or (s.travel_limit is not None and st.travelled >= s.travel_limit - 1e-12):
                st.halted = True
    # A group stops as a unit once any of its members stops.
    for g in scene.groups:
        if any(status.get(m, AgentStatus()).halted for m in g.members):
            for m in g.members:
                if m in scripts:
                    status.setdefault(m, AgentStatus()).halted = True
    persons = []
    for p in scene.persons:
        s = scripts.get(p.id)
        if s is None:
            persons.append(p)
            continue
        st = status[p.id]
        if st.halted or s.speed == 0:
            persons.append(replace(p, velocity=(0.0, 0.0)))
            continue
        vx, vy = p.velocity
        step = math.hypot(vx, vy) * dt
        if s.travel_limit is not None and st.travelled + step > s.travel_limit:
            scale = (s.travel_limit - st.travelled) / step
            vx_dt, vy_dt, step = vx * dt * scale, vy * dt * scale, s.travel_limit - st.travelled
        else:
            vx_dt, vy_dt = vx * dt, vy * dt
        st.travelled += step
        persons.append(replace(p, pose=Pose2D(p.pose.x + vx_dt, p.pose.y + vy_dt, p.pose.theta)))
    return rebuild_groups(scene.with_persons(persons))


def agents_halted(scenario: Scenario, scene: SceneState) -> bool:
    return all(p.speed == 0 for p in scene.persons)


# -- planning and control -----------------------------------------------------

def plan_path(costmap: Costmap, start: tuple[float, float], goal: tuple[float, float],
              weight: float = 0.02) -> list[tuple[float, float]] | None:
    """8-connected A* minimizing length * (1 + weight * cost).

    Waypoints are cell centers with the exact goal appended in place of the
    goal cell center.  Returns None when the goal cell is lethal or
    unreachable, or when either end lies outside the grid.
    """
    spec = costmap.spec
    s = spec.world_to_cell(*start)
    g = spec.world_to_cell(*goal)
    if s is None or g is None:
        return None
    cells = kernels.astar(costmap.cells, s[0], s[1], g[0], g[1], weight, INSCRIBED)
    if cells is None:
        return None
    pts = [spec.cell_center(i, j) for i, j in cells[1:-1]]
    pts.append((float(goal[0]), float(goal[1])))
    return pts


def path_cost(costmap: Costmap, cells: Sequence[tuple[int, int]], weight: float) -> float:
    """Cost of a cell path under the planner's edge model, in cell units."""
    total = 0.0
    for (i0, j0), (i1, j1) in zip(cells, cells[1:]):
        step = math.sqrt(2.0) if (i0 != i1 and j0 != j1) else 1.0
        total += step * (1.0 + weight * int(costmap.cells[i1, j1]))
    return total


def follow_path(robot: RobotState, waypoints: Sequence[tuple[float, float]], dt: float,
                cfg: SimConfig = SimConfig(), tolerance: float = 0.05) -> RobotState:
    """One control step toward the path.

    The command is computed on the lookahead point, then clipped to the
    velocity limits and the acceleration limit, and integrated with the
    midpoint heading.  Inside ``tolerance`` of the final waypoint the
    commands are zero.
    """
    if not waypoints:
        return RobotState(robot.pose, 0.0, 0.0)
    x, y, th = robot.pose.x, robot.pose.y, robot.pose.theta
    gx, gy = waypoints[-1]
    dist_goal = math.hypot(gx - x, gy - y)
    if dist_goal <= tolerance:
        return RobotState(robot.pose, 0.0, 0.0)
    target = waypoints[-1]
    for wp in waypoints:
        if math.hypot(wp[0] - x, wp[1] - y) >= cfg.lookahead:
            target = wp
            break
    err = wrap_angle(math.atan2(target[1] - y, target[0] - x) - th)
    w = max(-cfg.w_max, min(cfg.w_max, cfg.heading_gain * err))
    if abs(err) >= math.pi / 3:
        v_des = 0.0
    else:
        v_des = cfg.v_max * math.cos(err)
    v_des = min(v_des, math.sqrt(2.0 * cfg.a_max * dist_goal), dist_goal / dt)
    v = max(robot.v - cfg.a_max * dt, min(robot.v + cfg.a_max * dt, v_des))
    v = max(0.0, min(v, dist_goal / dt))
    mid = th + 0.5 * w * dt
    nx = x + v * math.cos(mid) * dt
    ny = y + v * math.sin(mid) * dt
    return RobotState(Pose2D(nx, ny, th + w * dt), v, w)


# -- scenario runner ----------------------------------------------------------

@dataclass
class TraceRecord:
    timestamp: float
    robot: RobotState
    scene: SceneState
    approach: ApproachPose | None
    hsci: HsciSample
    events: list[str]

    def to_dict(self) -> dict:
        a = self.approach
        return {
            "t": self.timestamp,
            "robot": {"x": self.robot.pose.x, "y": self.robot.pose.y, "theta": self.robot.pose.theta,
                      "v": self.robot.v, "w": self.robot.w},
            "scene": scene_to_dict(self.scene),
            "approach": None if a is None else {"x": a.x, "y": a.y, "heading": a.heading,
                                                "radius": a.radius_used, "fov_fallback": a.fov_fallback},
            "hsci": {"sii": self.hsci.sii, "sgi": self.hsci.sgi, "sdi": self.hsci.sdi},
            "events": self.events,
        }


@dataclass
class SimTrace:
    scenario: str
    config: str
    dt: float
    records: list[TraceRecord] = field(default_factory=list)
    success: bool = False
    time_to_goal: float | None = None

    def events(self, tag: str) -> list[float]:
        return [r.timestamp for r in self.records if tag in r.events]

    def summary(self, target: str | None = None) -> dict:
        sii = [r.hsci.sii for r in self.records] or [0.0]
        sgi = [r.hsci.sgi for r in self.records] or [0.0]
        final = None
        if self.records and target is not None:
            last = self.records[-1]
            try:
                c = target_of(last.scene, target).center
                final = math.hypot(last.robot.pose.x - c[0], last.robot.pose.y - c[1])
            except KeyError:
                final = None
        return {"scenario": self.scenario, "config": self.config, "success": self.success,
                "time_to_goal": self.time_to_goal, "final_distance": final,
                "max_sii": max(sii), "max_sgi": max(sgi)}

    def write_ndjson(self, path):
        with open(path, "w") as f:
            for r in self.records:
                f.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


SUMMARY_FIELDS = ["scenario", "config", "success", "time_to_goal", "final_distance", "max_sii", "max_sgi"]


def write_summary(path, rows: Sequence[dict]):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in SUMMARY_FIELDS})


@dataclass(frozen=True)
class Settings:
    """Model parameters shared by every run of a scenario."""

    adaptation: AdaptationConfig = AdaptationConfig()
    velocity: VelocityAdaptConfig = VelocityAdaptConfig()
    approach: ApproachConfig = ApproachConfig()
    evaluation: EvalConfig = EvalConfig()
    sim: SimConfig = SimConfig()
    clearing_radius: float = 0.45
    inscribed_radius: float = 0.4
    decay_rate: float = 3.0


def _static_costmap(scenario: Scenario) -> Costmap | None:
    if scenario.map_file is None:
        return None
    return rasterize_static(scenario.map_file)


def _hsci(robot: Pose2D, scene: SceneState, target_id: str | None, ecfg: EvalConfig, t: float) -> HsciSample:
    sdi = 0.0
    if target_id is not None:
        try:
            g = scene.group(target_id)
            sdi = compute_sdi(robot, g.pose)
        except KeyError:
            try:
                sdi = compute_sdi(robot, scene.person(target_id).pose)
            except KeyError:
                sdi = 0.0
    return HsciSample(t, compute_sii(robot, scene, ecfg), compute_sgi(robot, scene, ecfg), sdi)


def run_scenario(scenario: Scenario, flags: AlgorithmFlags | None = None,
                 settings: Settings = Settings(), static: Costmap | None = None) -> SimTrace:
    """Run one configuration of a scenario until goal-reached or timeout."""
    flags = flags or scenario.configs[0]
    simcfg = replace(settings.sim, dt=scenario.dt)
    static = static if static is not None else _static_costmap(scenario)
    spec = static.spec if static is not None else scenario.grid
    tol = simcfg.goal_tolerance or spec.resolution
    acfg = replace(settings.approach, robot_width=settings.adaptation.s_r)
    trace = SimTrace(scenario.name, flags.name, scenario.dt)
    scene = initial_scene(scenario)
    robot = RobotState(scenario.robot_start)
    status: dict[str, AgentStatus] = {}
    target_id: str | None = scenario.target
    last_center = target_of(scene, target_id).center
    approach: ApproachPose | None = None
    path: list[tuple[float, float]] | None = None
    n_ticks = int(round(scenario.duration / scenario.dt))
    lethal = static.cells == LETHAL if static is not None else None

    for k in range(n_ticks + 1):
        t = k * scenario.dt
        events: list[str] = []
        if k > 0:
            scene = step_agents(scenario, scene, robot, scenario.dt, status)
        if k % simcfg.replan_every == 0:
            found = track_target(scene, last_center, acfg.track_threshold) if target_id is not None else None
            if found is None:
                events.append(EVENT_TARGET_LOST)
            else:
                target_id = found
                last_center = target_of(scene, target_id).center
                pose, costmap = _replan(scene, robot, target_id, flags, settings, acfg, static, spec)
                if pose is None:
                    events.append(EVENT_NO_POSE)
                    approach, path = None, None
                else:
                    approach = pose
                    events.append(EVENT_REPLANNED)
                    path = plan_path(costmap, robot.pose.xy, (pose.x, pose.y),
                                     simcfg.path_weight)
                    if path is None:
                        events.append(EVENT_PLAN_FAILED)
        if k > 0 and path:
            nxt = follow_path(robot, path, scenario.dt, simcfg, tol)
            cell = spec.world_to_cell(nxt.pose.x, nxt.pose.y)
            if cell is None or (lethal is not None and lethal[cell]):
                nxt = RobotState(robot.pose, 0.0, 0.0)
            robot = nxt
        done = (approach is not None and path is not None
                and math.hypot(robot.pose.x - approach.x, robot.pose.y - approach.y) <= tol
                and agents_halted(scenario, scene))
        if done:
            events.append(EVENT_GOAL)
        elif k == n_ticks:
            events.append(EVENT_TIMEOUT)
        trace.records.append(TraceRecord(t, robot, scene, approach,
                                         _hsci(robot.pose, scene, target_id, settings.evaluation, t), events))
        if done:
            trace.success = True
            trace.time_to_goal = t
            break
    return trace


def _replan(scene: SceneState, robot: RobotState, target_id: str, flags: AlgorithmFlags, settings: Settings,
            acfg: ApproachConfig, static: Costmap | None, spec: GridSpec) -> tuple[ApproachPose | None, Costmap]:
    robot_xy = robot.pose.xy
    adapted = adapt_scene(scene, robot_xy, target_id, settings.adaptation, settings.velocity,
                          velocity=flags.space_adapt, arrangement=flags.arrangement_adapt)
    stack = LayerStack(spec, static, [p.pose.xy for p in scene.persons], settings.clearing_radius,
                       settings.inscribed_radius, settings.decay_rate)
    costmap = compose(stack, adapted)
    initial = None
    if scene.group_of(target_id) is None and any(p.id == target_id for p in scene.persons):
        # The search starts from the target's resting frontal deviation, not the speed-grown one.
        rest = adapt_scene(scene, robot_xy, target_id, settings.adaptation, settings.velocity,
                           velocity=False, arrangement=flags.arrangement_adapt)
        initial = rest.person(target_id).params.sigma_f
    pose = estimate_approach_pose(costmap, adapted, target_id, robot.pose, acfg,
                                  adaptive=flags.approach_adapt, initial_radius=initial)
    return pose, costmap


def run_all(scenario: Scenario, settings: Settings = Settings()) -> list[SimTrace]:
    static = _static_costmap(scenario)
    return [run_scenario(scenario, f, settings, static) for f in scenario.configs]
