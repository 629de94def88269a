"""Closed-form kinematics of the 3-DoF arm (base yaw + shoulder + elbow).

Model: yaw about the world z-axis at the base origin, shoulder joint at
height l1, then two links of lengths l2 and l3 moving in the vertical
plane selected by the yaw.  theta2 is measured from horizontal (positive
up); theta3 from the extension of link 2 (positive up).  Both elbow
branches of the inverse solution are exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .geometry import WorldPoint

_FK_TOL = 1e-9
_CLAMP_TOL = 1e-12


class KinematicsError(Exception):
    pass


class Unreachable(KinematicsError):
    pass


class JointLimitViolation(KinematicsError):
    pass


class YawSingularity(KinematicsError):
    pass


class EmptyCandidates(KinematicsError):
    pass


class ElbowBranch(Enum):
    """The two inverse-kinematics solution branches."""

    ELBOW_A = "elbow_a"  # theta3 >= 0
    ELBOW_B = "elbow_b"  # theta3 <= 0


DEFAULT_LIMITS = (
    (-math.pi, math.pi),
    (-math.pi / 2, math.pi),
    (-math.pi / 2, math.pi),
)


@dataclass(frozen=True)
class ArmGeometry:
    """Link lengths (meters) and per-joint angle limits (radians)."""

    l1: float
    l2: float
    l3: float
    joint_limits: tuple = DEFAULT_LIMITS
    tool_offset_z: float = 0.0  # constant vertical tool length, subtracted from target z

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0 and self.l3 > 0):
            raise ValueError("link lengths must be positive")
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        if len(limits) != 3 or any(lo > hi for lo, hi in limits):
            raise ValueError("joint_limits must be three nonempty intervals")
        object.__setattr__(self, "joint_limits", limits)


@dataclass(frozen=True)
class JointAngles:
    theta1: float
    theta2: float
    theta3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class PlanarTarget:
    """Target reduced to the vertical plane through the base: radial
    distance r, height above the shoulder s, and shoulder-to-target
    distance d."""

    r: float
    s: float
    d: float


def forward_kinematics(g: ArmGeometry, q: JointAngles) -> WorldPoint:
    """End-effector position in the arm base frame."""
    r = g.l2 * math.cos(q.theta2) + g.l3 * math.cos(q.theta2 + q.theta3)
    s = g.l2 * math.sin(q.theta2) + g.l3 * math.sin(q.theta2 + q.theta3)
    return WorldPoint(r * math.cos(q.theta1), r * math.sin(q.theta1), g.l1 + s)


def planar_reduce(g: ArmGeometry, target: WorldPoint) -> PlanarTarget:
    r = math.hypot(target.xw, target.yw)
    s = target.zw - g.l1
    return PlanarTarget(r, s, math.hypot(r, s))


def is_reachable(g: ArmGeometry, target: WorldPoint) -> bool:
    """Workspace membership: |l2 - l3| <= d <= l2 + l3.  Joint limits are
    not considered here; inverse_kinematics reports them per branch."""
    d = planar_reduce(g, target).d
    return abs(g.l2 - g.l3) <= d <= g.l2 + g.l3


def _clamped_acos(x: float) -> float:
    if x > 1.0:
        if x > 1.0 + _CLAMP_TOL:
            raise Unreachable(f"acos argument {x} out of range")
        x = 1.0
    elif x < -1.0:
        if x < -1.0 - _CLAMP_TOL:
            raise Unreachable(f"acos argument {x} out of range")
        x = -1.0
    return math.acos(x)


def _within_limits(g: ArmGeometry, q: JointAngles) -> bool:
    return all(
        lo - 1e-12 <= th <= hi + 1e-12
        for th, (lo, hi) in zip(q.as_tuple(), g.joint_limits)
    )


def inverse_kinematics(
    g: ArmGeometry,
    target: WorldPoint,
    branch: ElbowBranch,
    current: JointAngles | None = None,
) -> JointAngles:
    """Closed-form inverse solution for one elbow branch.

    Raises Unreachable outside the workspace, JointLimitViolation when this
    branch exists but violates a limit (the other branch may still work),
    and YawSingularity when the target is on the yaw axis and no current
    pose is given to tie-break theta1.
    """
    adjusted = WorldPoint(target.xw, target.yw, target.zw - g.tool_offset_z)
    pt = planar_reduce(g, adjusted)
    if not (abs(g.l2 - g.l3) - 1e-12 <= pt.d <= g.l2 + g.l3 + 1e-12):
        raise Unreachable(f"target at d={pt.d:.6g} outside [{abs(g.l2 - g.l3):.6g}, {g.l2 + g.l3:.6g}]")

    if pt.r == 0.0 and adjusted.xw == 0.0 and adjusted.yw == 0.0:
        if current is None:
            raise YawSingularity("target on the yaw axis; supply a current pose")
        theta1 = current.theta1
    else:
        theta1 = math.atan2(adjusted.yw, adjusted.xw)

    gamma = _clamped_acos((g.l2**2 + g.l3**2 - pt.d**2) / (2.0 * g.l2 * g.l3))
    theta3 = math.pi - gamma
    if branch is ElbowBranch.ELBOW_B:
        theta3 = -theta3
    theta2 = math.atan2(pt.s, pt.r) - math.atan2(
        g.l3 * math.sin(theta3), g.l2 + g.l3 * math.cos(theta3)
    )
    # keep theta2 in (-pi, pi]; FK is 2*pi-periodic so this is the same pose
    theta2 = math.atan2(math.sin(theta2), math.cos(theta2))
    q = JointAngles(theta1, theta2, theta3)
    if not _within_limits(g, q):
        raise JointLimitViolation(f"branch {branch.value} solution {q} outside limits")

    fk = forward_kinematics(g, q)
    err = math.dist(
        (fk.xw, fk.yw, fk.zw), (adjusted.xw, adjusted.yw, adjusted.zw)
    )
    assert err < _FK_TOL, f"FK residual {err} on IK output"
    return q


def ik_all_solutions(
    g: ArmGeometry,
    target: WorldPoint,
    current: JointAngles | None = None,
) -> list[tuple[ElbowBranch, JointAngles]]:
    """All joint-limit-feasible branch solutions, deduplicated at the
    workspace boundary where the branches coincide.  Empty means the
    target is unreachable or every branch violates a limit."""
    tie_break = current if current is not None else JointAngles(0.0, 0.0, 0.0)
    out: list[tuple[ElbowBranch, JointAngles]] = []
    for branch in (ElbowBranch.ELBOW_A, ElbowBranch.ELBOW_B):
        try:
            q = inverse_kinematics(g, target, branch, current=tie_break)
        except (Unreachable, JointLimitViolation, YawSingularity):
            continue
        if out and max(
            abs(a - b) for a, b in zip(q.as_tuple(), out[0][1].as_tuple())
        ) < 1e-9:
            continue
        out.append((branch, q))
    return out


def select_solution(
    candidates: list[JointAngles], current: JointAngles
) -> JointAngles:
    """Candidate closest to the current pose in max-norm joint distance.
    Ties keep the earliest candidate, so callers listing the elbow-up
    branch first get it on ties."""
    if not candidates:
        raise EmptyCandidates("no IK candidates to select from")
    return min(
        candidates,
        key=lambda q: max(
            abs(a - b) for a, b in zip(q.as_tuple(), current.as_tuple())
        ),
    )
