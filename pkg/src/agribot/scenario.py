"""Scenario file loading.

Sectioned UTF-8 key-value format:

  [camera]      fx/fy/cx/cy, then either ``rotation`` (9 row-major values,
                world->camera) + ``translation``, or ``position`` +
                ``look_at`` + ``up``.  The look-at form is converted at
                load time: camera z aims from position to look_at, camera
                x is z x up normalized, camera y completes the frame.
  [arm]         links = L1 L2 L3; thetaN_limits = min max; home = three
                joint angles; optional tool_offset_z.
  [arm_control] kp ki kd, output_limit, integral_limit, dt,
                max_joint_speed, actuator_speed_limit, grasp_tolerance.
  [scene]       object = class x y radius (one per line, z fixed at the
                object radius on the workbench); drop_zone = name x y z;
                workbench = x_min y_min x_max y_max.
  [noise]       pixel_sigma, drop_rate, spurious_rate.
  [commands]    say = <utterance>, in order.
  [run]         seed, max_duration.

Keys may repeat only where noted (object, drop_zone, say).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .command import Vocabulary, default_vocabulary
from .control import (
    DEFAULT_DT,
    DEFAULT_GAINS,
    DEFAULT_GRASP_TOLERANCE,
    PidGains,
)
from .detection import ClassList
from .geometry import CameraExtrinsics, CameraIntrinsics, CameraModel, WorldPoint
from .kinematics import DEFAULT_LIMITS, ArmGeometry, JointAngles


class ScenarioParseError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class NoiseSpec:
    pixel_sigma: float = 0.0  # std dev of box-center jitter, pixels
    drop_rate: float = 0.0  # probability an object yields no detection
    spurious_rate: float = 0.0  # expected spurious detections per frame

    @property
    def enabled(self) -> bool:
        return self.pixel_sigma > 0 or self.drop_rate > 0 or self.spurious_rate > 0


@dataclass(frozen=True)
class ControlConfig:
    gains: PidGains
    dt: float = DEFAULT_DT
    max_joint_speed: float = 2.0
    actuator_speed_limit: float = 10.0
    grasp_tolerance: float = DEFAULT_GRASP_TOLERANCE
    approach_height: float = 0.05
    release_dwell: float = 0.2
    settle_tolerance: float = 1.5e-3  # rad, per joint, at-target predicate


@dataclass
class SceneObject:
    id: int
    class_name: str
    position: WorldPoint  # center; z equals the radius (resting on the bench)
    radius: float


@dataclass
class Scene:
    objects: list[SceneObject]
    drop_zones: dict[str, WorldPoint]
    workbench_height: float = 0.0
    extent: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Scenario:
    camera: CameraModel
    arm: ArmGeometry
    home: JointAngles
    control: ControlConfig
    scene: Scene
    noise: NoiseSpec
    commands: tuple[str, ...]
    seed: int
    max_duration: float
    classes: ClassList
    vocabulary: Vocabulary


def _floats(value: str, n: int, key: str, line: int) -> list[float]:
    parts = value.split()
    if len(parts) != n:
        raise ScenarioParseError(f"{key} expects {n} values, got {len(parts)}", line)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ScenarioParseError(f"{key} has a non-numeric value", line) from None


def _parse_sections(text: str):
    """Return {section: [(line_number, key, value), ...]} preserving order."""
    sections: dict[str, list[tuple[int, str, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ScenarioParseError("content before any section header", lineno)
        if "=" not in line:
            raise ScenarioParseError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        sections[current].append((lineno, key, value))
    return sections


def _single_valued(entries, section: str) -> dict[str, tuple[int, str]]:
    out: dict[str, tuple[int, str]] = {}
    for lineno, key, value in entries:
        if key in out:
            raise ScenarioParseError(f"duplicate key {key!r} in [{section}]", lineno)
        out[key] = (lineno, value)
    return out


def _get(kv, key, default=None):
    if key in kv:
        return kv[key][1]
    return default


def _parse_camera(entries) -> CameraModel:
    kv = _single_valued(entries, "camera")
    for key in ("fx", "fy", "cx", "cy"):
        if key not in kv:
            raise ScenarioParseError(f"[camera] missing {key}")
    try:
        intr = CameraIntrinsics(
            *(float(kv[k][1]) for k in ("fx", "fy", "cx", "cy"))
        )
    except ValueError as exc:
        raise ScenarioParseError(f"[camera] {exc}") from None

    if "rotation" in kv:
        lineno, value = kv["rotation"]
        R = np.array(_floats(value, 9, "rotation", lineno)).reshape(3, 3)
        if "translation" not in kv:
            raise ScenarioParseError("[camera] rotation given without translation")
        tl, tv = kv["translation"]
        t = np.array(_floats(tv, 3, "translation", tl))
        try:
            ext = CameraExtrinsics(R, t)
        except ValueError as exc:
            raise ScenarioParseError(f"[camera] {exc}", lineno) from None
    elif "position" in kv:
        pl, pv = kv["position"]
        position = _floats(pv, 3, "position", pl)
        if "look_at" not in kv:
            raise ScenarioParseError("[camera] position given without look_at")
        ll, lv = kv["look_at"]
        look_at = _floats(lv, 3, "look_at", ll)
        up = [0.0, 0.0, 1.0]
        if "up" in kv:
            ul, uv = kv["up"]
            up = _floats(uv, 3, "up", ul)
        try:
            ext = CameraExtrinsics.look_at(position, look_at, up)
        except ValueError as exc:
            raise ScenarioParseError(f"[camera] {exc}", pl) from None
    else:
        raise ScenarioParseError("[camera] needs rotation+translation or position+look_at")
    return CameraModel(intr, ext)


def _parse_arm(entries) -> tuple[ArmGeometry, JointAngles]:
    kv = _single_valued(entries, "arm")
    if "links" not in kv:
        raise ScenarioParseError("[arm] missing links")
    lineno, value = kv["links"]
    links = _floats(value, 3, "links", lineno)
    limits = list(DEFAULT_LIMITS)
    for idx, key in enumerate(("theta1_limits", "theta2_limits", "theta3_limits")):
        if key in kv:
            ll, lv = kv[key]
            lo, hi = _floats(lv, 2, key, ll)
            limits[idx] = (lo, hi)
    tool = float(_get(kv, "tool_offset_z", "0"))
    try:
        arm = ArmGeometry(*links, joint_limits=tuple(limits), tool_offset_z=tool)
    except ValueError as exc:
        raise ScenarioParseError(f"[arm] {exc}", lineno) from None
    if "home" in kv:
        hl, hv = kv["home"]
        home = JointAngles(*_floats(hv, 3, "home", hl))
    else:
        home = JointAngles(0.0, 1.2, -2.0)
    return arm, home


def _parse_control(entries) -> ControlConfig:
    kv = _single_valued(entries, "arm_control")
    gains = PidGains(
        kp=float(_get(kv, "kp", str(DEFAULT_GAINS["kp"]))),
        ki=float(_get(kv, "ki", str(DEFAULT_GAINS["ki"]))),
        kd=float(_get(kv, "kd", str(DEFAULT_GAINS["kd"]))),
        output_limit=float(_get(kv, "output_limit", "10")),
        integral_limit=float(_get(kv, "integral_limit", "1")),
    )
    return ControlConfig(
        gains=gains,
        dt=float(_get(kv, "dt", str(DEFAULT_DT))),
        max_joint_speed=float(_get(kv, "max_joint_speed", "2.0")),
        actuator_speed_limit=float(_get(kv, "actuator_speed_limit", "10.0")),
        grasp_tolerance=float(_get(kv, "grasp_tolerance", str(DEFAULT_GRASP_TOLERANCE))),
        approach_height=float(_get(kv, "approach_height", "0.05")),
        release_dwell=float(_get(kv, "release_dwell", "0.2")),
    )


def _parse_scene(entries, classes: ClassList) -> Scene:
    objects: list[SceneObject] = []
    drop_zones: dict[str, WorldPoint] = {}
    extent = (-1.0, -1.0, 1.0, 1.0)
    next_id = 1
    for lineno, key, value in entries:
        if key == "object":
            parts = value.split()
            if len(parts) != 4:
                raise ScenarioParseError("object expects: class x y radius", lineno)
            class_name = parts[0]
            if class_name not in classes.names:
                raise ScenarioParseError(f"unknown class {class_name!r}", lineno)
            try:
                x, y, radius = (float(p) for p in parts[1:])
            except ValueError:
                raise ScenarioParseError("non-numeric object field", lineno) from None
            if radius <= 0:
                raise ScenarioParseError("object radius must be positive", lineno)
            objects.append(
                SceneObject(next_id, class_name, WorldPoint(x, y, radius), radius)
            )
            next_id += 1
        elif key == "drop_zone":
            parts = value.split()
            if len(parts) != 4:
                raise ScenarioParseError("drop_zone expects: name x y z", lineno)
            try:
                drop_zones[parts[0]] = WorldPoint(*(float(p) for p in parts[1:]))
            except ValueError:
                raise ScenarioParseError("non-numeric drop_zone field", lineno) from None
        elif key == "workbench":
            extent = tuple(_floats(value, 4, "workbench", lineno))
        else:
            raise ScenarioParseError(f"unknown [scene] key {key!r}", lineno)
    scene = Scene(objects, drop_zones, extent=extent)
    x_min, y_min, x_max, y_max = extent
    for obj in objects:
        if not (x_min <= obj.position.xw <= x_max and y_min <= obj.position.yw <= y_max):
            raise ScenarioParseError(
                f"object {obj.id} at ({obj.position.xw}, {obj.position.yw}) "
                "outside the workbench extent"
            )
    return scene


def load_scenario(
    text: str,
    classes: ClassList = ClassList(),
    vocabulary: Vocabulary | None = None,
) -> Scenario:
    sections = _parse_sections(text)
    for required in ("camera", "arm", "scene"):
        if required not in sections:
            raise ScenarioParseError(f"missing [{required}] section")
    camera = _parse_camera(sections["camera"])
    arm, home = _parse_arm(sections["arm"])
    control = _parse_control(sections.get("arm_control", []))
    scene = _parse_scene(sections["scene"], classes)

    nkv = _single_valued(sections.get("noise", []), "noise")
    noise = NoiseSpec(
        pixel_sigma=float(_get(nkv, "pixel_sigma", "0")),
        drop_rate=float(_get(nkv, "drop_rate", "0")),
        spurious_rate=float(_get(nkv, "spurious_rate", "0")),
    )

    commands = []
    for lineno, key, value in sections.get("commands", []):
        if key != "say":
            raise ScenarioParseError(f"unknown [commands] key {key!r}", lineno)
        commands.append(value)

    rkv = _single_valued(sections.get("run", []), "run")
    seed = int(_get(rkv, "seed", "0"))
    max_duration = float(_get(rkv, "max_duration", "60"))

    return Scenario(
        camera=camera,
        arm=arm,
        home=home,
        control=control,
        scene=scene,
        noise=noise,
        commands=tuple(commands),
        seed=seed,
        max_duration=max_duration,
        classes=classes,
        vocabulary=vocabulary if vocabulary is not None else default_vocabulary(),
    )


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
