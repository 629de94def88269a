"""Joint-level control: discrete PID, cubic joint trajectories, the
first-order simulated actuator, and the pick-place phase machine.

The PID runs in velocity-command form on position error, derivative on
error with the first-step derivative suppressed, and integral clamping
for anti-windup.  Trajectories are per-joint cubics with zero endpoint
velocities; peak velocity of a cubic is 1.5 * |delta| / T, which fixes
the duration rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .kinematics import ArmGeometry, JointAngles

DEFAULT_DT = 0.01
DEFAULT_GAINS = dict(kp=8.0, ki=0.5, kd=0.2)
DEFAULT_GRASP_TOLERANCE = 0.005
MIN_TRAJECTORY_DURATION = 0.1


class ControlError(Exception):
    pass


class NonPositiveDt(ControlError):
    pass


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    output_limit: float = 10.0  # rad/s, symmetric clamp
    integral_limit: float = 1.0  # rad*s, anti-windup clamp

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be nonnegative")
        if self.output_limit <= 0 or self.integral_limit <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    previous_error: float = 0.0
    initialized: bool = False


def pid_step(
    gains: PidGains, state: PidState, error: float, dt: float
) -> tuple[float, PidState]:
    """One discrete PID update; returns (velocity command, new state)."""
    if dt <= 0:
        raise NonPositiveDt(f"dt={dt}")
    integral = state.integral + error * dt
    integral = max(-gains.integral_limit, min(gains.integral_limit, integral))
    derivative = (error - state.previous_error) / dt if state.initialized else 0.0
    command = gains.kp * error + gains.ki * integral + gains.kd * derivative
    command = max(-gains.output_limit, min(gains.output_limit, command))
    return command, PidState(integral, error, True)


@dataclass(frozen=True)
class JointTrajectory:
    """Per-joint cubic q(t) = q0 + a2 t^2 + a3 t^3 with zero endpoint
    velocities, all joints sharing one duration."""

    start: JointAngles
    end: JointAngles
    duration: float

    def _coeffs(self, q0: float, q1: float) -> tuple[float, float]:
        T = self.duration
        delta = q1 - q0
        return 3.0 * delta / T**2, -2.0 * delta / T**3

    def position(self, t: float) -> JointAngles:
        t = min(max(t, 0.0), self.duration)
        out = []
        for q0, q1 in zip(self.start.as_tuple(), self.end.as_tuple()):
            a2, a3 = self._coeffs(q0, q1)
            out.append(q0 + a2 * t**2 + a3 * t**3)
        return JointAngles(*out)

    def velocity(self, t: float) -> tuple[float, float, float]:
        t = min(max(t, 0.0), self.duration)
        out = []
        for q0, q1 in zip(self.start.as_tuple(), self.end.as_tuple()):
            a2, a3 = self._coeffs(q0, q1)
            out.append(2.0 * a2 * t + 3.0 * a3 * t**2)
        return tuple(out)


def plan_trajectory(
    start: JointAngles, end: JointAngles, max_joint_speed: float
) -> JointTrajectory:
    """Cubic joint-space trajectory whose per-joint peak velocity stays
    within max_joint_speed; duration floored at 0.1 s."""
    if max_joint_speed <= 0:
        raise ValueError("max_joint_speed must be positive")
    duration = MIN_TRAJECTORY_DURATION
    for q0, q1 in zip(start.as_tuple(), end.as_tuple()):
        duration = max(duration, 1.5 * abs(q1 - q0) / max_joint_speed)
    return JointTrajectory(start, end, duration)


def actuator_step(
    state: JointAngles,
    command: tuple[float, float, float],
    dt: float,
    speed_limit: float = 10.0,
    geometry: ArmGeometry | None = None,
) -> JointAngles:
    """First-order plant: integrate the clamped velocity command, then
    clamp to joint limits when a geometry is supplied."""
    if dt <= 0:
        raise NonPositiveDt(f"dt={dt}")
    out = []
    for th, cmd in zip(state.as_tuple(), command):
        cmd = max(-speed_limit, min(speed_limit, cmd))
        out.append(th + cmd * dt)
    if geometry is not None:
        out = [
            max(lo, min(hi, th)) for th, (lo, hi) in zip(out, geometry.joint_limits)
        ]
    return JointAngles(*out)


class PickPlacePhase(Enum):
    APPROACH = "approach"
    DESCEND = "descend"
    GRASP = "grasp"
    ASCEND = "ascend"
    TRANSIT = "transit"
    RELEASE = "release"
    HOME = "home"
    DONE = "done"


PHASE_ORDER = tuple(PickPlacePhase)


def pick_place_advance(
    phase: PickPlacePhase, arm_at_target: bool, grasp_confirmed: bool
) -> PickPlacePhase:
    """Advance the phase machine one step when the current phase's
    completion predicate holds; otherwise stay.  Release completes
    unconditionally (its dwell is the caller's tick)."""
    if phase is PickPlacePhase.DONE:
        return phase
    if phase is PickPlacePhase.GRASP:
        done = grasp_confirmed
    elif phase is PickPlacePhase.RELEASE:
        done = True
    else:
        done = arm_at_target
    if not done:
        return phase
    return PHASE_ORDER[PHASE_ORDER.index(phase) + 1]
