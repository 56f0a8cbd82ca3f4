"""Shared domain vocabulary: device state, calibration, modes, poses, commands.

All types here are plain immutable values and safe to copy across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

ADC_MAX = 4095  # 12-bit converters on every channel
NUM_JOINTS = 6
NUM_CHANNELS = 7  # 6 joints + trigger
SEQ_MODULO = 65536

# Button bit assignments inside MasterState.buttons / JointReport.buttons.
BUTTON_RECORD = 0x01
BUTTON_SENSITIVITY = 0x02

# 6 joint angles in radians, ordered base to wrist.
JointVector = tuple

ZERO_JOINTS: JointVector = (0.0,) * NUM_JOINTS


def joint_vector(values) -> JointVector:
    """Build a validated 6-tuple of finite joint angles."""
    q = tuple(float(v) for v in values)
    if len(q) != NUM_JOINTS:
        raise ValueError(f"expected {NUM_JOINTS} joint angles, got {len(q)}")
    if not all(math.isfinite(v) for v in q):
        raise ValueError("joint angles must be finite")
    return q


class SensitivityMode(IntEnum):
    """Divisor applied to leader motion deltas.

    The modes cycle standard -> precise -> super-precise -> standard on each
    sensitivity button press.
    """

    STANDARD = 1
    PRECISE = 2
    SUPER_PRECISE = 4

    def next(self) -> "SensitivityMode":
        cycle = {
            SensitivityMode.STANDARD: SensitivityMode.PRECISE,
            SensitivityMode.PRECISE: SensitivityMode.SUPER_PRECISE,
            SensitivityMode.SUPER_PRECISE: SensitivityMode.STANDARD,
        }
        return cycle[self]


@dataclass(frozen=True)
class MasterState:
    """One accepted sample of the leader device."""

    seq: int  # wrap-around counter, mod 65536
    adc: tuple  # 7 x raw counts (6 joints + trigger)
    buttons: int  # BUTTON_* bitfield
    rx_time_us: int  # host receive timestamp, microseconds

    def __post_init__(self):
        if not 0 <= self.seq < SEQ_MODULO:
            raise ValueError(f"seq {self.seq} outside u16 range")
        if len(self.adc) != NUM_CHANNELS:
            raise ValueError(f"expected {NUM_CHANNELS} adc channels")
        if any(not 0 <= v <= ADC_MAX for v in self.adc):
            raise ValueError("adc count outside 12-bit range")
        if not 0 <= self.buttons <= 0xFF:
            raise ValueError("buttons outside u8 range")


@dataclass(frozen=True)
class ChannelCalibration:
    """Affine map from raw counts to radians for one channel.

    angle = sign * (counts - offset) * scale.  The limits are expressed in
    radians and are applied by the control layer, not by the conversion.
    """

    offset: float  # counts at the calibrated zero posture
    scale: float  # radians per count, > 0
    sign: int  # +1 or -1
    limit_min: float  # radians
    limit_max: float  # radians

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if not self.limit_min < self.limit_max:
            raise ValueError("limit_min must be < limit_max")


@dataclass(frozen=True)
class Calibration:
    """Per-channel calibration for one device: 6 joints then the trigger."""

    channels: tuple  # NUM_CHANNELS x ChannelCalibration

    def __post_init__(self):
        if len(self.channels) != NUM_CHANNELS:
            raise ValueError(f"expected {NUM_CHANNELS} channel entries")

    @property
    def joints(self) -> tuple:
        return self.channels[:NUM_JOINTS]

    @property
    def trigger(self) -> ChannelCalibration:
        return self.channels[NUM_JOINTS]


@dataclass(frozen=True)
class ForceChannelParams:
    """Constants of the force channel's current-to-voltage stage.

    The output stage produces v_ref * (-r_g / r_fs) volts.  g0 and c describe
    the sensor's conductance-versus-force model G(F) = g0 + c*F, so the
    output is linear in force.  f_max is the full-scale force in newtons.
    """

    v_ref: float = 3.3  # volts
    r_g: float = 10_000.0  # ohms, feedback resistor
    g0: float = 0.0  # siemens at zero force
    c: float = 5e-06  # siemens per newton
    f_max: float = 20.0  # newtons

    def __post_init__(self):
        if self.v_ref <= 0 or self.r_g <= 0 or self.c <= 0 or self.f_max <= 0:
            raise ValueError("v_ref, r_g, c and f_max must be > 0")
        if self.g0 < 0:
            raise ValueError("g0 must be >= 0")


@dataclass(frozen=True)
class GripperState:
    """Follower gripper: opening fraction (1 = fully open) and sensed force."""

    opening: float
    force: float  # newtons

    def __post_init__(self):
        if not 0.0 <= self.opening <= 1.0:
            raise ValueError("opening must be within [0, 1]")
        if self.force < 0.0:
            raise ValueError("force must be >= 0")


@dataclass(frozen=True)
class SlaveCommand:
    """Follower joint targets plus gripper opening target."""

    q_target: JointVector
    gripper_target: float  # fraction in [0, 1], 1 = fully open

    def __post_init__(self):
        if len(self.q_target) != NUM_JOINTS:
            raise ValueError(f"expected {NUM_JOINTS} joint targets")
        if not 0.0 <= self.gripper_target <= 1.0:
            raise ValueError("gripper_target must be within [0, 1]")


@dataclass(frozen=True)
class Pose:
    """End-effector pose: position in meters, unit quaternion (w, x, y, z)."""

    position: tuple  # 3 floats, meters
    orientation: tuple  # 4 floats, w first

    def __post_init__(self):
        if len(self.position) != 3:
            raise ValueError("position must have 3 components")
        if len(self.orientation) != 4:
            raise ValueError("orientation must have 4 components")
        norm = math.sqrt(sum(v * v for v in self.orientation))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {norm} != 1")
