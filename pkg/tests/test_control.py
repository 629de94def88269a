import math

import pytest

from agribot.control import (
    DEFAULT_GAINS,
    JointTrajectory,
    NonPositiveDt,
    PHASE_ORDER,
    PickPlacePhase,
    PidGains,
    PidState,
    actuator_step,
    pick_place_advance,
    pid_step,
    plan_trajectory,
)
from agribot.kinematics import ArmGeometry, JointAngles


class TestPidStep:
    def test_proportional_only(self):
        cmd, _ = pid_step(PidGains(2, 0, 0), PidState(), 0.5, 0.01)
        assert cmd == pytest.approx(1.0)

    def test_zero_error_zero_command(self):
        state = PidState()
        for _ in range(100):
            cmd, state = pid_step(PidGains(3, 1, 0.5), state, 0.0, 0.01)
            assert cmd == 0.0

    def test_integral_accumulation(self):
        gains = PidGains(0, 1, 0)
        state = PidState()
        cmds = []
        for _ in range(2):
            cmd, state = pid_step(gains, state, 1.0, 0.1)
            cmds.append(cmd)
        assert cmds == [pytest.approx(0.1), pytest.approx(0.2)]

    def test_first_step_derivative_suppressed(self):
        gains = PidGains(0, 0, 5, output_limit=1e6)
        cmd, state = pid_step(gains, PidState(), 2.0, 0.01)
        assert cmd == 0.0
        cmd, _ = pid_step(gains, state, 2.5, 0.01)
        assert cmd == pytest.approx(5 * 0.5 / 0.01, abs=1e-9)

    def test_memoryless_with_p_only(self):
        gains = PidGains(4, 0, 0)
        state = PidState()
        for err in (0.3, -0.8, 0.1):
            cmd, state = pid_step(gains, state, err, 0.02)
            assert cmd == pytest.approx(4 * err)

    def test_anti_windup(self):
        gains = PidGains(0, 1, 0, integral_limit=0.5)
        state = PidState()
        for _ in range(10000):
            _, state = pid_step(gains, state, 1.0, 0.01)
            assert abs(state.integral) <= 0.5

    def test_output_clamp(self):
        cmd, _ = pid_step(PidGains(100, 0, 0, output_limit=2.0), PidState(), 1.0, 0.01)
        assert cmd == 2.0

    def test_non_positive_dt(self):
        with pytest.raises(NonPositiveDt):
            pid_step(PidGains(1, 0, 0), PidState(), 0.1, 0.0)


class TestPlanTrajectory:
    def test_zero_motion_floor_duration(self):
        q = JointAngles(0.1, 0.2, 0.3)
        traj = plan_trajectory(q, q, 1.0)
        assert traj.duration == 0.1
        assert traj.position(0.05) == q

    def test_duration_and_peak_velocity(self):
        traj = plan_trajectory(JointAngles(0, 0, 0), JointAngles(1, 0, 0), 1.0)
        assert traj.duration == pytest.approx(1.5)
        # cubic peak velocity at the midpoint equals 1.5 * delta / T
        assert traj.velocity(traj.duration / 2)[0] == pytest.approx(1.0)

    def test_endpoints_exact(self):
        start, end = JointAngles(-0.4, 0.7, 1.1), JointAngles(0.9, -0.2, 0.3)
        traj = plan_trajectory(start, end, 2.0)
        assert traj.position(0.0) == start
        p = traj.position(traj.duration)
        assert max(abs(a - b) for a, b in zip(p.as_tuple(), end.as_tuple())) < 1e-12
        assert all(abs(v) < 1e-12 for v in traj.velocity(0.0))
        assert all(abs(v) < 1e-12 for v in traj.velocity(traj.duration))

    def test_monotone_positions(self):
        traj = plan_trajectory(JointAngles(0, -1, 2), JointAngles(1, 1, -2), 2.0)
        steps = 2000  # 1 kHz over the whole trajectory
        for j in range(3):
            prev = None
            sign = 1 if traj.end.as_tuple()[j] >= traj.start.as_tuple()[j] else -1
            for i in range(steps + 1):
                v = traj.position(traj.duration * i / steps).as_tuple()[j]
                if prev is not None:
                    assert sign * (v - prev) >= -1e-12
                prev = v

    def test_peak_velocity_within_limit(self, rng):
        for _ in range(100):
            start = JointAngles(*rng.uniform(-3, 3, size=3))
            end = JointAngles(*rng.uniform(-3, 3, size=3))
            speed = float(rng.uniform(0.5, 3))
            traj = plan_trajectory(start, end, speed)
            for i in range(101):
                vels = traj.velocity(traj.duration * i / 100)
                assert max(abs(v) for v in vels) <= speed + 1e-9


class TestActuatorStep:
    def test_zero_command(self):
        q = JointAngles(0.1, 0.2, 0.3)
        assert actuator_step(q, (0, 0, 0), 0.01) == q

    def test_euler_step(self):
        q = actuator_step(JointAngles(0, 0, 0), (1, 0, 0), 0.01)
        assert q.theta1 == pytest.approx(0.01)

    def test_speed_clamp(self):
        q = actuator_step(JointAngles(0, 0, 0), (100, -100, 0), 0.01, speed_limit=2.0)
        assert q.theta1 == pytest.approx(0.02)
        assert q.theta2 == pytest.approx(-0.02)

    def test_joint_limit_clamp(self):
        g = ArmGeometry(1, 1, 1, joint_limits=((-0.1, 0.1), (-1, 1), (-1, 1)))
        q = actuator_step(JointAngles(0.09, 0, 0), (10, 0, 0), 0.1, geometry=g)
        assert q.theta1 == 0.1

    def test_non_positive_dt(self):
        with pytest.raises(NonPositiveDt):
            actuator_step(JointAngles(0, 0, 0), (0, 0, 0), -0.1)


class TestPickPlacePhases:
    def test_approach_advances_on_arrival(self):
        assert pick_place_advance(PickPlacePhase.APPROACH, True, False) is PickPlacePhase.DESCEND

    def test_grasp_waits_for_confirmation(self):
        assert pick_place_advance(PickPlacePhase.GRASP, True, False) is PickPlacePhase.GRASP
        assert pick_place_advance(PickPlacePhase.GRASP, False, True) is PickPlacePhase.ASCEND

    def test_full_walk_in_order(self):
        phase = PickPlacePhase.APPROACH
        visited = [phase]
        while phase is not PickPlacePhase.DONE:
            phase = pick_place_advance(phase, True, True)
            visited.append(phase)
        assert visited == list(PHASE_ORDER)

    def test_no_arrival_no_advance(self):
        for phase in (PickPlacePhase.APPROACH, PickPlacePhase.DESCEND,
                      PickPlacePhase.ASCEND, PickPlacePhase.TRANSIT, PickPlacePhase.HOME):
            assert pick_place_advance(phase, False, True) is phase

    def test_done_is_terminal(self):
        assert pick_place_advance(PickPlacePhase.DONE, True, True) is PickPlacePhase.DONE


def track(start, goal, gains, dt=0.01, speed=2.0, settle=1.0):
    """Closed-loop tracking of the cubic trajectory with velocity
    feedforward plus PID correction; returns final angles."""
    traj = plan_trajectory(start, goal, speed)
    joints = start
    states = [PidState()] * 3
    t = 0.0
    while t < traj.duration + settle:
        t += dt
        desired = traj.position(t)
        feedforward = traj.velocity(t)
        cmds = []
        for i, (d, a) in enumerate(zip(desired.as_tuple(), joints.as_tuple())):
            cmd, states[i] = pid_step(gains, states[i], d - a, dt)
            cmds.append(cmd + feedforward[i])
        joints = actuator_step(joints, tuple(cmds), dt)
    return joints


class TestClosedLoop:
    def test_default_gains_converge(self, rng):
        gains = PidGains(**DEFAULT_GAINS)
        for _ in range(10):
            start = JointAngles(*rng.uniform(-1.5, 1.5, size=3))
            goal = JointAngles(*rng.uniform(-1.5, 1.5, size=3))
            final = track(start, goal, gains)
            err = max(abs(a - b) for a, b in zip(final.as_tuple(), goal.as_tuple()))
            assert err < 1e-3
