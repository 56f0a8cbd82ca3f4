import random

import pytest

from echo_teleop.control import (
    ControlState,
    Event,
    FeedbackGains,
    cycle_sensitivity,
    detect_button_events,
    force_feedback_duty,
    teleop_step,
)
from echo_teleop.kinematics import JointLimits
from echo_teleop.types import SensitivityMode

WIDE = JointLimits(lower=(-1e9,) * 6, upper=(1e9,) * 6, v_max=3.0)
NARROW = JointLimits(lower=(-1.0,) * 6, upper=(1.0,) * 6, v_max=3.0)
ZERO = (0.0,) * 6


def fresh_state(mode=SensitivityMode.STANDARD):
    return ControlState.initial(leader_q=ZERO, follower_q=ZERO, mode=mode)


class TestTeleopStep:
    def test_identity_mapping_mode_one(self):
        state = fresh_state()
        master = (0.3, -0.2, 0.1, 0.5, -0.5, 0.05)
        _, cmd = teleop_step(state, master, 0.5, NARROW)
        assert cmd.q_target == master

    @pytest.mark.parametrize("divisor", [1, 2, 4])
    def test_scaling_law_exact(self, divisor):
        state = fresh_state(SensitivityMode(divisor))
        rng = random.Random(31)
        for _ in range(200):
            delta = tuple(rng.uniform(-2, 2) for _ in range(6))
            _, cmd = teleop_step(state, delta, 0.5, WIDE)
            for joint in range(6):
                assert cmd.q_target[joint] == delta[joint] / divisor  # exact

    def test_paper_mode_examples(self):
        # leader delta 0.20 rad -> follower delta 0.10 (1:2) and 0.05 (1:4)
        master = (0.2,) + (0.0,) * 5
        _, cmd = teleop_step(fresh_state(SensitivityMode.PRECISE), master, 0.5, WIDE)
        assert cmd.q_target[0] == pytest.approx(0.10, abs=1e-15)
        _, cmd = teleop_step(fresh_state(SensitivityMode.SUPER_PRECISE), master, 0.5, WIDE)
        assert cmd.q_target[0] == pytest.approx(0.05, abs=1e-15)

    def test_clamp_safety(self):
        rng = random.Random(32)
        state = fresh_state()
        for _ in range(300):
            master = tuple(rng.uniform(-10, 10) for _ in range(6))
            state, cmd = teleop_step(state, master, 0.5, NARROW)
            assert all(-1.0 <= v <= 1.0 for v in cmd.q_target)
            assert 0.0 <= cmd.gripper_target <= 1.0

    def test_trigger_normalization(self):
        state = fresh_state()
        _, cmd = teleop_step(state, ZERO, 0.0, NARROW)
        assert cmd.gripper_target == 0.0  # closed endpoint
        _, cmd = teleop_step(state, ZERO, 1.0, NARROW)
        assert cmd.gripper_target == 1.0  # open endpoint
        _, cmd = teleop_step(state, ZERO, 0.25, NARROW)
        assert cmd.gripper_target == pytest.approx(0.25)
        _, cmd = teleop_step(state, ZERO, 7.0, NARROW)
        assert cmd.gripper_target == 1.0  # clamped


class TestCycleSensitivity:
    def test_three_cycles_return_start(self):
        state = fresh_state()
        for expected in (2, 4, 1):
            state = cycle_sensitivity(state)
            assert state.mode.value == expected

    def test_mode_enum_cycle_is_pure_three_cycle(self):
        for start in SensitivityMode:
            mode = start
            for _ in range(3):
                mode = mode.next()
            assert mode is start

    def test_continuity_across_switch(self):
        rng = random.Random(33)
        state = fresh_state()
        master = ZERO
        for _ in range(50):  # wander a while
            master = tuple(rng.uniform(-0.8, 0.8) for _ in range(6))
            state, cmd_before = teleop_step(state, master, 0.5, NARROW)
        state = cycle_sensitivity(state)
        _, cmd_after = teleop_step(state, master, 0.5, NARROW)
        assert cmd_after.q_target == cmd_before.q_target  # zero jump, exact

    def test_continuity_through_full_cycle_mid_motion(self):
        state = fresh_state()
        master = (0.4, -0.3, 0.2, 0.1, -0.1, 0.0)
        state, before = teleop_step(state, master, 0.5, NARROW)
        for _ in range(3):
            state = cycle_sensitivity(state)
            state, after = teleop_step(state, master, 0.5, NARROW)
            assert after.q_target == before.q_target
            before = after


class TestButtonEvents:
    def test_rising_edge_record(self):
        assert detect_button_events(0b00, 0b01) == [Event.RECORD_TOGGLE]

    def test_level_hold_gives_nothing(self):
        assert detect_button_events(0b01, 0b01) == []
        assert detect_button_events(0b11, 0b11) == []

    def test_both_edges_ordered(self):
        assert detect_button_events(0b00, 0b11) == [
            Event.RECORD_TOGGLE,
            Event.SENSITIVITY_CYCLE,
        ]

    def test_falling_edge_gives_nothing(self):
        assert detect_button_events(0b11, 0b00) == []

    def test_sensitivity_only(self):
        assert detect_button_events(0b01, 0b11) == [Event.SENSITIVITY_CYCLE]


class TestForceFeedbackDuty:
    GAINS = FeedbackGains(k_f=50.0, duty_max=400, deadband=0.5)

    def test_disabled_is_zero(self):
        for force in (0.0, 1.0, 100.0):
            assert force_feedback_duty(force, self.GAINS, enabled=False) == 0

    def test_deadband_boundary(self):
        assert force_feedback_duty(0.5, self.GAINS, enabled=True) == 0
        saturating = 0.5 + 400 / 50.0
        assert force_feedback_duty(saturating, self.GAINS, enabled=True) == 400

    def test_hand_computed_example(self):
        # 50 permille/N * (3 N - 0.5 N) = 125 permille
        assert force_feedback_duty(3.0, self.GAINS, enabled=True) == 125

    def test_monotone_and_bounded(self):
        previous = -1
        for i in range(2000):
            force = 0.01 * i
            duty = force_feedback_duty(force, self.GAINS, enabled=True)
            assert duty >= previous
            assert 0 <= duty <= self.GAINS.duty_max
            previous = duty

    def test_rejects_negative_force(self):
        with pytest.raises(ValueError):
            force_feedback_duty(-1.0, self.GAINS, enabled=True)

    def test_gain_validation(self):
        with pytest.raises(ValueError):
            FeedbackGains(duty_max=0)
        with pytest.raises(ValueError):
            FeedbackGains(duty_max=1001)
        with pytest.raises(ValueError):
            FeedbackGains(k_f=-1.0)
