"""Deterministic world model and pipeline orchestration.

One command flows: oracle detection -> confidence filter -> NMS ->
target selection -> box center -> back-projection onto the grasp plane
-> inverse kinematics -> trajectory -> PID-tracked phase machine through
approach, descend, grasp, ascend, transit, release, home.

Everything stochastic draws from a single seeded generator held in the
sim state, so a scenario replays bit-identically for the same seed.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from . import command as command_mod
from .command import ActionRequest, CommandError, match_utterance, map_to_action
from .control import (
    JointTrajectory,
    PickPlacePhase,
    PidState,
    actuator_step,
    pick_place_advance,
    pid_step,
    plan_trajectory,
)
from .detection import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    BoundingBox,
    ClassList,
    Detection,
    box_center,
    filter_by_confidence,
    nms,
)
from .geometry import (
    CameraModel,
    GeometryError,
    PixelPoint,
    WorldPoint,
    backproject_to_plane,
    camera_to_pixel,
    world_to_camera,
)
from .kinematics import (
    JointAngles,
    KinematicsError,
    Unreachable,
    forward_kinematics,
    ik_all_solutions,
    select_solution,
)
from .scenario import (
    ControlConfig,
    NoiseSpec,
    Scenario,
    Scene,
    SceneObject,
    load_scenario,
)


class SimulatorError(Exception):
    pass


class ObjectBehindCamera(SimulatorError):
    pass


class ClassNotDetected(SimulatorError):
    pass


class NonPositiveDt(SimulatorError):
    pass


@dataclass(frozen=True)
class Event:
    stamp: float
    kind: str  # CommandAccepted | DetectionsPublished | TargetSelected |
    #            PhaseChanged | PickCompleted | Error
    payload: dict

    def to_dict(self) -> dict:
        return {"stamp": round(self.stamp, 9), "kind": self.kind, "payload": self.payload}


# Motion phases and where they aim; GRASP and RELEASE hold position.
_MOTION_PHASES = (
    PickPlacePhase.APPROACH,
    PickPlacePhase.DESCEND,
    PickPlacePhase.ASCEND,
    PickPlacePhase.TRANSIT,
    PickPlacePhase.HOME,
)


@dataclass
class PickPlan:
    """Precomputed joint targets for every motion phase of one pick."""

    action: ActionRequest
    target_object_id: int
    grasp_point: WorldPoint
    drop_zone_name: str
    drop_point: WorldPoint
    phase_targets: dict[PickPlacePhase, JointAngles]


@dataclass
class SimState:
    scene: Scene
    joints: JointAngles
    clock: float = 0.0
    phase: PickPlacePhase = PickPlacePhase.DONE
    held_object: SceneObject | None = None
    events: list[Event] = field(default_factory=list)
    seed: int = 0
    rng: np.random.Generator = None
    plan: PickPlan | None = None
    trajectory: JointTrajectory | None = None
    trajectory_elapsed: float = 0.0
    pid_states: tuple[PidState, ...] = (PidState(), PidState(), PidState())
    release_dwell_left: float = 0.0
    reached_grasp_target: bool = False  # latch: Descend finished at its target

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @property
    def gripper(self) -> str:
        return "holding" if self.held_object is not None else "empty"

    def log(self, kind: str, **payload):
        self.events.append(Event(self.clock, kind, payload))

    def snapshot(self) -> "SimState":
        """Deep copy for concurrent readers; never hands out live references."""
        return copy.deepcopy(self)


def make_state(scenario: Scenario) -> SimState:
    return SimState(
        scene=copy.deepcopy(scenario.scene),
        joints=scenario.home,
        seed=scenario.seed,
        rng=np.random.default_rng(scenario.seed),
    )


def oracle_detect(
    scene: Scene,
    cam: CameraModel,
    noise: NoiseSpec,
    rng: np.random.Generator,
    classes: ClassList = ClassList(),
) -> list[Detection]:
    """Geometric stand-in for the trained detector.

    Each object center is projected to a pixel; the box is a square of
    side 2 * radius * fx / depth around it.  Confidences are drawn from
    clamp(N(0.9, 0.05), 0, 1).  With noise enabled, centers jitter, and
    detections may be dropped or invented at the configured rates.
    """
    dets: list[Detection] = []
    k = cam.intrinsics
    for obj in scene.objects:
        cp = world_to_camera(cam.extrinsics, obj.position)
        if cp.zc <= 0:
            raise ObjectBehindCamera(f"object {obj.id} at depth {cp.zc}")
        px = camera_to_pixel(k, cp)
        confidence = float(np.clip(rng.normal(0.9, 0.05), 0.0, 1.0))
        u, v = px.u, px.v
        if noise.enabled:
            if rng.random() < noise.drop_rate:
                continue
            if noise.pixel_sigma > 0:
                u += rng.normal(0.0, noise.pixel_sigma)
                v += rng.normal(0.0, noise.pixel_sigma)
        half = obj.radius * k.fx / cp.zc
        class_id = classes.names.index(obj.class_name)
        dets.append(
            Detection(
                class_id,
                obj.class_name,
                confidence,
                BoundingBox(u - half, v - half, u + half, v + half),
            )
        )
    if noise.enabled and noise.spurious_rate > 0:
        for _ in range(int(rng.poisson(noise.spurious_rate))):
            cid = int(rng.integers(0, len(classes)))
            cu = float(rng.uniform(0, 2 * k.cx)) if k.cx > 0 else float(rng.uniform(0, 100))
            cv = float(rng.uniform(0, 2 * k.cy)) if k.cy > 0 else float(rng.uniform(0, 100))
            side = float(rng.uniform(5, 40))
            dets.append(
                Detection(
                    cid,
                    classes.label(cid),
                    float(np.clip(rng.normal(0.75, 0.1), 0.0, 1.0)),
                    BoundingBox(cu - side / 2, cv - side / 2, cu + side / 2, cv + side / 2),
                )
            )
    return dets


def select_target(
    dets: list[Detection],
    requested_class: str,
    image_center: PixelPoint = PixelPoint(0.0, 0.0),
) -> Detection:
    """Highest-confidence detection of the requested class; confidence ties
    go to the box center nearest the image center, then to input order."""
    matching = [(i, d) for i, d in enumerate(dets) if d.label == requested_class]
    if not matching:
        raise ClassNotDetected(f"no {requested_class!r} among {len(dets)} detections")

    def key(item):
        i, d = item
        c = box_center(d.box)
        dist = ((c.u - image_center.u) ** 2 + (c.v - image_center.v) ** 2) ** 0.5
        return (-d.confidence, dist, i)

    return min(matching, key=key)[1]


def _solve_phase_target(
    scenario: Scenario, point: WorldPoint, current: JointAngles
) -> JointAngles:
    solutions = ik_all_solutions(scenario.arm, point, current=current)
    if not solutions:
        raise Unreachable(
            f"no feasible IK branch for ({point.xw:.4g}, "
            f"{point.yw:.4g}, {point.zw:.4g})"
        )
    return select_solution([q for _, q in solutions], current)


def build_pick_plan(
    state: SimState, scenario: Scenario, req: ActionRequest
) -> PickPlan:
    """Run the perception/geometry front half of the pipeline and solve
    joint targets for every motion phase."""
    cam = scenario.camera
    dets = oracle_detect(state.scene, cam, scenario.noise, state.rng, scenario.classes)
    dets = filter_by_confidence(dets, DEFAULT_CONFIDENCE_THRESHOLD)
    dets = nms(dets)
    state.log(
        "DetectionsPublished",
        detections=[_det_dict(d) for d in dets],
    )
    image_center = PixelPoint(cam.intrinsics.cx, cam.intrinsics.cy)
    target = select_target(dets, req.target_class, image_center)
    center = box_center(target.box)

    # Grasp plane: the matched object's center height (its radius).  With
    # several candidates of the class, back-project at each radius and take
    # the object the ray actually lands on.
    candidates = [o for o in state.scene.objects if o.class_name == req.target_class]
    best_obj, best_point, best_dist = None, None, float("inf")
    for obj in candidates:
        point = backproject_to_plane(
            cam.intrinsics, cam.extrinsics, center, obj.position.zw
        )
        dist = np.linalg.norm(point.as_array() - obj.position.as_array())
        if dist < best_dist:
            best_obj, best_point, best_dist = obj, point, dist
    state.log(
        "TargetSelected",
        object_id=best_obj.id,
        class_name=best_obj.class_name,
        confidence=target.confidence,
        pixel=[center.u, center.v],
        grasp_point=[best_point.xw, best_point.yw, best_point.zw],
    )

    zones = state.scene.drop_zones
    if not zones:
        raise SimulatorError("scenario defines no drop zones")
    zone_name = req.drop_zone if req.drop_zone else sorted(zones)[0]
    if zone_name not in zones:
        raise SimulatorError(f"unknown drop zone {zone_name!r}")
    drop = zones[zone_name]

    hover = scenario.control.approach_height
    above_grasp = WorldPoint(best_point.xw, best_point.yw, best_point.zw + hover)
    above_drop = WorldPoint(drop.xw, drop.yw, drop.zw + hover)
    targets: dict[PickPlacePhase, JointAngles] = {}
    current = state.joints
    for phase, point in (
        (PickPlacePhase.APPROACH, above_grasp),
        (PickPlacePhase.DESCEND, best_point),
        (PickPlacePhase.ASCEND, above_grasp),
        (PickPlacePhase.TRANSIT, above_drop),
    ):
        targets[phase] = _solve_phase_target(scenario, point, current)
        current = targets[phase]
    targets[PickPlacePhase.HOME] = scenario.home
    return PickPlan(
        action=req,
        target_object_id=best_obj.id,
        grasp_point=best_point,
        drop_zone_name=zone_name,
        drop_point=drop,
        phase_targets=targets,
    )


def _det_dict(d: Detection) -> dict:
    return {
        "class_id": d.class_id,
        "label": d.label,
        "confidence": round(d.confidence, 9),
        "box": [d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max],
    }


def _enter_phase(state: SimState, scenario: Scenario, phase: PickPlacePhase):
    previous = state.phase
    state.phase = phase
    state.log("PhaseChanged", phase=phase.value, previous=previous.value)
    state.pid_states = (PidState(), PidState(), PidState())
    state.trajectory = None
    state.trajectory_elapsed = 0.0
    if phase in _MOTION_PHASES and state.plan is not None:
        target = state.plan.phase_targets[phase]
        state.trajectory = plan_trajectory(
            state.joints, target, scenario.control.max_joint_speed
        )
    elif phase is PickPlacePhase.RELEASE:
        state.release_dwell_left = scenario.control.release_dwell


def _abort(state: SimState, scenario: Scenario, error: Exception):
    state.log("Error", error=type(error).__name__, detail=str(error))
    if state.held_object is not None:
        # Put the object back where it was grabbed; an aborted pick never
        # loses or duplicates objects.
        state.scene.objects.append(state.held_object)
        state.scene.objects.sort(key=lambda o: o.id)
        state.held_object = None
    state.plan = None
    state.trajectory = None
    state.phase = PickPlacePhase.DONE


def _at_target(state: SimState, tol: float) -> bool:
    if state.trajectory is None:
        return True
    if state.trajectory_elapsed < state.trajectory.duration:
        return False
    end = state.trajectory.end
    return max(
        abs(a - b) for a, b in zip(state.joints.as_tuple(), end.as_tuple())
    ) < tol


def step(state: SimState, scenario: Scenario, dt: float | None = None) -> SimState:
    """Advance clock, actuator, controller, and phase machine by one tick."""
    cfg = scenario.control
    if dt is None:
        dt = cfg.dt
    if dt <= 0:
        raise NonPositiveDt(f"dt={dt}")
    state.clock += dt

    if state.plan is None:
        return state

    if state.trajectory is not None:
        state.trajectory_elapsed += dt
        desired = state.trajectory.position(state.trajectory_elapsed)
        feedforward = state.trajectory.velocity(state.trajectory_elapsed)
        commands = []
        new_pid = []
        for err, ff, pid_state in zip(
            (d - a for d, a in zip(desired.as_tuple(), state.joints.as_tuple())),
            feedforward,
            state.pid_states,
        ):
            cmd, ns = pid_step(cfg.gains, pid_state, err, dt)
            commands.append(cmd + ff)
            new_pid.append(ns)
        state.pid_states = tuple(new_pid)
        state.joints = actuator_step(
            state.joints, tuple(commands), dt, cfg.actuator_speed_limit, scenario.arm
        )

    arm_at_target = _at_target(state, cfg.settle_tolerance)
    grasp_confirmed = False

    phase = state.phase
    if phase is PickPlacePhase.GRASP:
        ee = forward_kinematics(scenario.arm, state.joints)
        obj = next(
            (o for o in state.scene.objects if o.id == state.plan.target_object_id),
            None,
        )
        if obj is None:
            _abort(state, scenario, SimulatorError("target object vanished"))
            return state
        if not state.reached_grasp_target:
            _abort(state, scenario, SimulatorError("grasp entered without reaching the descend target"))
            return state
        dist = float(np.linalg.norm(ee.as_array() - obj.position.as_array()))
        if dist <= cfg.grasp_tolerance:
            grasp_confirmed = True
            state.scene.objects.remove(obj)
            state.held_object = obj
        else:
            _abort(
                state,
                scenario,
                SimulatorError(
                    f"grasp failed: end-effector {dist:.4f} m from object "
                    f"(tolerance {cfg.grasp_tolerance})"
                ),
            )
            return state
    elif phase is PickPlacePhase.RELEASE:
        state.release_dwell_left -= dt
        if state.release_dwell_left > 0:
            return state
        obj = state.held_object
        obj.position = state.plan.drop_point
        state.scene.objects.append(obj)
        state.scene.objects.sort(key=lambda o: o.id)
        state.held_object = None
        state.log(
            "PickCompleted",
            object_id=obj.id,
            class_name=obj.class_name,
            drop_zone=state.plan.drop_zone_name,
        )

    if phase is PickPlacePhase.DESCEND and arm_at_target:
        state.reached_grasp_target = True

    next_phase = pick_place_advance(phase, arm_at_target, grasp_confirmed)
    if next_phase is not phase:
        if next_phase is PickPlacePhase.DONE:
            state.phase = PickPlacePhase.DONE
            state.log("PhaseChanged", phase="done", previous=phase.value)
            state.plan = None
            state.trajectory = None
        else:
            _enter_phase(state, scenario, next_phase)
    return state


def start_pipeline(state: SimState, scenario: Scenario, req: ActionRequest) -> bool:
    """Plan a command and enter its first phase; returns True when there is
    motion left to tick (False for immediate completion or a logged error)."""
    state.log(
        "CommandAccepted",
        verb=req.verb,
        target_class=req.target_class,
        drop_zone=req.drop_zone,
    )
    if req.verb == "stop":
        state.phase = PickPlacePhase.DONE
        state.plan = None
        state.trajectory = None
        return False
    if req.verb == "home":
        plan = PickPlan(
            action=req,
            target_object_id=-1,
            grasp_point=WorldPoint(0, 0, 0),
            drop_zone_name="",
            drop_point=WorldPoint(0, 0, 0),
            phase_targets={PickPlacePhase.HOME: scenario.home},
        )
        state.plan = plan
        state.reached_grasp_target = False
        _enter_phase(state, scenario, PickPlacePhase.HOME)
        return True

    try:
        plan = build_pick_plan(state, scenario, req)
    except (SimulatorError, GeometryError, KinematicsError, CommandError) as exc:
        _abort(state, scenario, exc)
        return False
    state.plan = plan
    state.reached_grasp_target = False
    _enter_phase(state, scenario, PickPlacePhase.APPROACH)
    return True


def pipeline_execute(
    state: SimState, scenario: Scenario, req: ActionRequest
) -> SimState:
    """Run one accepted command through the full pipeline to completion
    (or to a logged error), ticking the simulation loop."""
    if start_pipeline(state, scenario, req):
        _run_until_done(state, scenario)
    return state


def _run_until_done(state: SimState, scenario: Scenario) -> SimState:
    deadline = state.clock + scenario.max_duration
    while state.phase is not PickPlacePhase.DONE:
        step(state, scenario)
        if state.clock > deadline:
            _abort(
                state,
                scenario,
                SimulatorError(f"command exceeded max_duration {scenario.max_duration} s"),
            )
    return state


def _scene_dict(scene: Scene) -> dict:
    return {
        "objects": [
            {
                "id": o.id,
                "class": o.class_name,
                "position": [o.position.xw, o.position.yw, o.position.zw],
                "radius": o.radius,
            }
            for o in scene.objects
        ],
        "drop_zones": {
            name: [p.xw, p.yw, p.zw] for name, p in scene.drop_zones.items()
        },
        "workbench": list(scene.extent),
    }


def run_scenario(text: str) -> dict:
    """Load a scenario, execute its scripted commands in order, and return
    the full report.  Identical text and seed give byte-identical reports."""
    scenario = load_scenario(text)
    state = make_state(scenario)
    outcomes = []
    for utterance_text in scenario.commands:
        outcome = {"utterance": utterance_text}
        try:
            matches = match_utterance(
                scenario.vocabulary,
                command_mod.Utterance.from_text(utterance_text),
            )
            scene_classes = {o.class_name for o in state.scene.objects}
            action = map_to_action(matches[0], scene_classes)
        except CommandError as exc:
            state.log("Error", error=type(exc).__name__, detail=str(exc))
            outcome.update(accepted=False, error=type(exc).__name__)
            outcomes.append(outcome)
            continue
        events_before = len(state.events)
        pipeline_execute(state, scenario, action)
        new_events = state.events[events_before:]
        succeeded = any(e.kind == "PickCompleted" for e in new_events) or (
            action.verb in ("home", "stop")
            and not any(e.kind == "Error" for e in new_events)
        )
        outcome.update(
            accepted=True,
            action={
                "verb": action.verb,
                "target_class": action.target_class,
                "drop_zone": action.drop_zone,
            },
            succeeded=succeeded,
        )
        outcomes.append(outcome)
    return {
        "seed": scenario.seed,
        "events": [e.to_dict() for e in state.events],
        "outcomes": outcomes,
        "final_scene": _scene_dict(state.scene),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)
