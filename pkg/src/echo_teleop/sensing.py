"""Raw channel values to physical quantities.

Two conversion chains live here:

* potentiometer counts -> joint radians (affine map from calibration)
* the force chain built around the current-to-voltage stage
  V_OUT = V_REF * (-R_G / R_FS), with the sensor modeled as a conductance
  affine in force, G(F) = g0 + c*F.  Composing the two gives
  V_OUT = -V_REF * R_G * (g0 + c*F): output linear in force, which is the
  whole point of the linearization stage.

Calibration files are INI-style key/value documents; see docs/calibration.md.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import CalibrationMissing, CountsOutOfRange, ForceOutOfRange, NonPositiveResistance
from .types import (
    ADC_MAX,
    NUM_CHANNELS,
    NUM_JOINTS,
    Calibration,
    ChannelCalibration,
    ForceChannelParams,
)

# Default mechanical assumption: 300 degrees of pot travel over the full
# 12-bit span, mid-travel at counts 2048.
DEFAULT_SCALE = math.radians(300.0) / 4096.0  # rad per count
DEFAULT_OFFSET = 2048.0


@dataclass(frozen=True)
class FsrModel:
    """Force-sensitive resistor as conductance affine in force."""

    g0: float = 0.0  # siemens at zero force
    c: float = 5e-06  # siemens per newton

    def __post_init__(self):
        if self.g0 < 0:
            raise ValueError("g0 must be >= 0")
        if self.c <= 0:
            raise ValueError("c must be > 0")

    def resistance(self, force: float) -> float:
        """R_FS(F) = 1 / (g0 + c*F); strictly decreasing in force."""
        return 1.0 / (self.g0 + self.c * force)


def fsr_model_of(params: ForceChannelParams) -> FsrModel:
    return FsrModel(g0=params.g0, c=params.c)


def adc_to_angle(counts: int, channel_cal: ChannelCalibration) -> float:
    """Convert one raw sample to radians.  No clamping; that is control's job."""
    if not 0 <= counts <= ADC_MAX:
        raise CountsOutOfRange(f"counts {counts} outside 0..{ADC_MAX}")
    return channel_cal.sign * (counts - channel_cal.offset) * channel_cal.scale


def angle_to_counts(angle: float, channel_cal: ChannelCalibration) -> int:
    """Inverse of adc_to_angle, rounded and clamped to the 12-bit range."""
    counts = round(channel_cal.offset + channel_cal.sign * angle / channel_cal.scale)
    return min(ADC_MAX, max(0, counts))


def linearized_voltage(r_fs: float, params: ForceChannelParams) -> float:
    """Output of the current-to-voltage stage for a given sensor resistance."""
    if r_fs <= 0:
        raise NonPositiveResistance(f"r_fs must be > 0, got {r_fs}")
    return params.v_ref * (-params.r_g / r_fs)


def force_to_voltage(force: float, model: FsrModel, params: ForceChannelParams) -> float:
    """Stage output in volts for an applied force; linear in the force."""
    if not 0.0 <= force <= params.f_max:
        raise ForceOutOfRange(f"force {force} outside [0, {params.f_max}]")
    return -params.v_ref * params.r_g * (model.g0 + model.c * force)


def voltage_to_force(
    mv_magnitude: float, model: FsrModel, params: ForceChannelParams
) -> float:
    """Invert the force chain from a millivolt magnitude; clamps to [0, f_max]."""
    volts = abs(mv_magnitude) / 1000.0
    force = (volts / (params.v_ref * params.r_g) - model.g0) / model.c
    return min(params.f_max, max(0.0, force))


def voltage_to_wire_mv(volts: float) -> int:
    """Magnitude millivolts as carried by ForceReport frames (0..3300)."""
    return min(3300, max(0, round(abs(volts) * 1000.0)))


def default_channel_calibration() -> ChannelCalibration:
    return ChannelCalibration(
        offset=DEFAULT_OFFSET,
        scale=DEFAULT_SCALE,
        sign=1,
        limit_min=-math.radians(150.0),
        limit_max=math.radians(150.0),
    )


def default_calibration() -> Calibration:
    """Centered channels with 300-degree travel; trigger closed at 0, open at 1 rad."""
    joint = default_channel_calibration()
    trigger = ChannelCalibration(
        offset=DEFAULT_OFFSET,
        scale=DEFAULT_SCALE,
        sign=1,
        limit_min=0.0,  # trigger angle when fully closed
        limit_max=1.0,  # trigger angle when fully open
    )
    return Calibration(channels=(joint,) * NUM_JOINTS + (trigger,))


_CHANNEL_KEYS = ("offset", "scale", "sign", "limit_min", "limit_max")


def save_calibration(path, calibration: Calibration, params: ForceChannelParams) -> None:
    parser = configparser.ConfigParser()
    for index, entry in enumerate(calibration.channels):
        section = f"joint{index}" if index < NUM_JOINTS else "trigger"
        parser[section] = {
            "offset": repr(entry.offset),
            "scale": repr(entry.scale),
            "sign": str(entry.sign),
            "limit_min": repr(entry.limit_min),
            "limit_max": repr(entry.limit_max),
        }
    parser["force"] = {
        "v_ref": repr(params.v_ref),
        "r_g": repr(params.r_g),
        "g0": repr(params.g0),
        "c": repr(params.c),
        "f_max": repr(params.f_max),
    }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def load_calibration(path) -> tuple:
    """Read (Calibration, ForceChannelParams) from an INI calibration file."""
    path = Path(path)
    if not path.is_file():
        raise CalibrationMissing(f"calibration file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
        channels = []
        for index in range(NUM_CHANNELS):
            section = f"joint{index}" if index < NUM_JOINTS else "trigger"
            got = parser[section]
            channels.append(
                ChannelCalibration(
                    offset=float(got["offset"]),
                    scale=float(got["scale"]),
                    sign=int(got["sign"]),
                    limit_min=float(got["limit_min"]),
                    limit_max=float(got["limit_max"]),
                )
            )
        force = parser["force"]
        params = ForceChannelParams(
            v_ref=float(force.get("v_ref", "3.3")),
            r_g=float(force["r_g"]),
            g0=float(force["g0"]),
            c=float(force["c"]),
            f_max=float(force["f_max"]),
        )
    except (KeyError, ValueError, configparser.Error) as exc:
        raise CalibrationMissing(f"bad calibration file {path}: {exc}") from exc
    return Calibration(channels=tuple(channels)), params
