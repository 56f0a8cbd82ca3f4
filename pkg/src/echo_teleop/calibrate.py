"""Guided calibration capture.

Walks the operator through a set of held postures, samples the device over the
transport at each one, and derives per-channel offsets, direction signs and
limits.  The radians-per-count scale itself is not observable without a
reference angle, so the mechanical default (300 degrees over the 12-bit span)
is kept; see docs/calibration.md.
"""

from __future__ import annotations

from .errors import TransportUnavailable
from .protocol import FrameParser, JointReport
from .sensing import DEFAULT_SCALE
from .types import (
    NUM_CHANNELS,
    NUM_JOINTS,
    Calibration,
    ChannelCalibration,
    ForceChannelParams,
)


def _mean_counts(transport, parser: FrameParser, samples: int, tick=None) -> list:
    """Average `samples` JointReports; `tick` advances a lockstep sim world."""
    sums = [0.0] * NUM_CHANNELS
    seen = 0
    idle_reads = 0
    while seen < samples:
        if tick is not None:
            tick()
        data = transport.read()
        if not data:
            idle_reads += 1
            if idle_reads > 100_000:
                raise TransportUnavailable("no frames from device during calibration")
            continue
        messages, _errors = parser.feed(data)
        for msg in messages:
            if isinstance(msg, JointReport) and seen < samples:
                for channel in range(NUM_CHANNELS):
                    sums[channel] += msg.adc[channel]
                seen += 1
    return [value / samples for value in sums]


def run_calibration(
    transport,
    prompt,
    notify,
    samples: int = 50,
    scale: float = DEFAULT_SCALE,
    force_params: ForceChannelParams = None,
    tick=None,
) -> tuple:
    """Interactive capture; returns (Calibration, ForceChannelParams).

    prompt(text) blocks until the operator holds the requested posture;
    notify(text) reports progress.  tick, when given, advances a lockstep sim
    between samples (used by sim transports and tests).
    """
    parser = FrameParser()

    prompt("Hold the device at the zero posture (all joints neutral, trigger released)")
    zero = _mean_counts(transport, parser, samples, tick)
    notify(f"zero posture captured ({samples} samples)")

    channels = []
    for joint in range(NUM_JOINTS):
        prompt(f"Move joint {joint} to its positive-direction end stop")
        plus = _mean_counts(transport, parser, samples, tick)
        prompt(f"Move joint {joint} to its opposite end stop")
        minus = _mean_counts(transport, parser, samples, tick)
        sign = 1 if plus[joint] >= zero[joint] else -1
        limit_max = sign * (plus[joint] - zero[joint]) * scale
        limit_min = sign * (minus[joint] - zero[joint]) * scale
        if limit_min >= limit_max:
            limit_min, limit_max = limit_max, limit_min
        channels.append(
            ChannelCalibration(
                offset=zero[joint],
                scale=scale,
                sign=sign,
                limit_min=limit_min,
                limit_max=limit_max,
            )
        )
        notify(
            f"joint {joint}: offset {zero[joint]:.1f}, sign {sign:+d}, "
            f"range [{limit_min:.3f}, {limit_max:.3f}] rad"
        )

    prompt("Squeeze the trigger fully closed")
    closed = _mean_counts(transport, parser, samples, tick)
    prompt("Release the trigger fully open")
    opened = _mean_counts(transport, parser, samples, tick)
    trigger_index = NUM_JOINTS
    sign = 1 if opened[trigger_index] >= closed[trigger_index] else -1
    open_angle = sign * (opened[trigger_index] - closed[trigger_index]) * scale
    channels.append(
        ChannelCalibration(
            offset=closed[trigger_index],
            scale=scale,
            sign=sign,
            limit_min=0.0,  # closed
            limit_max=open_angle,  # open
        )
    )
    notify(f"trigger: closed at {closed[trigger_index]:.1f} counts, open span {open_angle:.3f} rad")

    return (
        Calibration(channels=tuple(channels)),
        force_params or ForceChannelParams(),
    )
