"""Teleoperation control law: sensitivity-scaled delta mapping, button edges,
and the force-feedback motor duty.

The leader drives the follower through clutched deltas: the follower target is
an anchored follower pose plus the leader's motion away from its own anchor,
divided by the sensitivity mode.  Both anchors are re-set atomically whenever
the mode cycles, so the commanded trajectory is continuous across a switch and
no workspace is lost in the scaled modes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .kinematics import JointLimits, clamp_to_limits
from .types import (
    BUTTON_RECORD,
    BUTTON_SENSITIVITY,
    JointVector,
    SensitivityMode,
    SlaveCommand,
)


class Event(Enum):
    RECORD_TOGGLE = "record_toggle"
    SENSITIVITY_CYCLE = "sensitivity_cycle"


@dataclass(frozen=True)
class FeedbackGains:
    """Proportional force -> trigger-motor duty law."""

    k_f: float = 50.0  # permille per newton
    duty_max: int = 400  # permille cap
    deadband: float = 0.5  # newtons ignored before any feedback

    def __post_init__(self):
        if self.k_f < 0:
            raise ValueError("k_f must be >= 0")
        if not 0 < self.duty_max <= 1000:
            raise ValueError("duty_max must be in (0, 1000]")
        if self.deadband < 0:
            raise ValueError("deadband must be >= 0")


@dataclass(frozen=True)
class ControlState:
    """Everything the teleop step needs to carry between ticks."""

    anchor_leader: JointVector
    anchor_follower: JointVector
    mode: SensitivityMode
    ff_enabled: bool
    prev_buttons: int
    recording: bool
    # Latest observed leader pose and issued (clamped) target; these become
    # the new anchors when the mode cycles.
    last_leader: JointVector
    last_target: JointVector
    trigger_closed: float  # trigger angle at fully-closed grip, rad
    trigger_open: float  # trigger angle at fully-open grip, rad

    @classmethod
    def initial(
        cls,
        leader_q: JointVector,
        follower_q: JointVector,
        mode: SensitivityMode = SensitivityMode.STANDARD,
        ff_enabled: bool = True,
        trigger_closed: float = 0.0,
        trigger_open: float = 1.0,
    ) -> "ControlState":
        return cls(
            anchor_leader=leader_q,
            anchor_follower=follower_q,
            mode=mode,
            ff_enabled=ff_enabled,
            prev_buttons=0,
            recording=False,
            last_leader=leader_q,
            last_target=follower_q,
            trigger_closed=trigger_closed,
            trigger_open=trigger_open,
        )


def normalized_trigger(state: ControlState, trigger_angle: float) -> float:
    """Map the trigger angle onto [0, 1] opening (0 = closed, 1 = open)."""
    span = state.trigger_open - state.trigger_closed
    fraction = (trigger_angle - state.trigger_closed) / span
    return min(1.0, max(0.0, fraction))


def teleop_step(
    state: ControlState,
    master_angles: JointVector,
    trigger_angle: float,
    limits: JointLimits,
) -> tuple:
    """One control tick: scaled delta mapping plus trigger normalization.

    Returns (state', SlaveCommand).  In 1:1 mode with coincident anchors this
    is exact joint matching.
    """
    s = state.mode.value
    target = tuple(
        af + (m - al) / s
        for af, m, al in zip(state.anchor_follower, master_angles, state.anchor_leader)
    )
    clamped = clamp_to_limits(target, limits)
    command = SlaveCommand(
        q_target=clamped,
        gripper_target=normalized_trigger(state, trigger_angle),
    )
    new_state = replace(state, last_leader=master_angles, last_target=clamped)
    return new_state, command


def cycle_sensitivity(state: ControlState) -> ControlState:
    """Advance 1 -> 2 -> 4 -> 1 and re-anchor so the command does not jump."""
    return replace(
        state,
        mode=state.mode.next(),
        anchor_leader=state.last_leader,
        anchor_follower=state.last_target,
    )


def detect_button_events(prev_bits: int, new_bits: int) -> list:
    """Rising-edge detection; level holds produce nothing.

    When both buttons rise in one sample the order is fixed:
    [RECORD_TOGGLE, SENSITIVITY_CYCLE].
    """
    rising = ~prev_bits & new_bits
    events = []
    if rising & BUTTON_RECORD:
        events.append(Event.RECORD_TOGGLE)
    if rising & BUTTON_SENSITIVITY:
        events.append(Event.SENSITIVITY_CYCLE)
    return events


def force_feedback_duty(grip_force: float, gains: FeedbackGains, enabled: bool) -> int:
    """Trigger-motor duty in permille; positive opposes trigger closure.

    Zero when disabled or within the deadband, proportional above it,
    saturating at duty_max.
    """
    if grip_force < 0:
        raise ValueError("grip_force must be >= 0")
    if not enabled or grip_force <= gains.deadband:
        return 0
    duty = gains.k_f * (grip_force - gains.deadband)
    return int(round(min(float(gains.duty_max), duty)))
