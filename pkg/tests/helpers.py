"""Shared test utilities: independent oracles and random generators.

The oracles here are deliberately written from scratch against the documented
formats and formulas, not by calling the implementation under test.
"""

import random

import numpy as np

from echo_teleop.protocol import (
    ForceReport,
    Heartbeat,
    JointReport,
    LedCommand,
    MotorCommand,
)


def crc16_oracle(data: bytes) -> int:
    """Bitwise shift-register CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF)."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


def random_message(rng: random.Random):
    """Uniformly pick one message type with in-range random fields."""
    kind = rng.randrange(5)
    if kind == 0:
        return JointReport(
            seq=rng.randrange(65536),
            adc=tuple(rng.randrange(4096) for _ in range(7)),
            buttons=rng.randrange(256),
        )
    if kind == 1:
        return ForceReport(seq=rng.randrange(65536), millivolts=rng.randrange(3301))
    if kind == 2:
        return MotorCommand(duty=rng.randint(-1000, 1000))
    if kind == 3:
        return LedCommand(mode=rng.choice((1, 2, 4)), recording=rng.randrange(2))
    return Heartbeat(uptime_ms=rng.randrange(2**32))


# --- forward-kinematics oracle: explicit elementary homogeneous transforms ---


def _rot_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    )


def _rot_x(alpha: float) -> np.ndarray:
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array(
        [[1.0, 0.0, 0.0, 0.0], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
    )


def _translate(x: float, y: float, z: float) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = (x, y, z)
    return m


def fk_oracle_matrix(q, dh_rows) -> np.ndarray:
    """Chain Rz(theta) Tz(d) Tx(a) Rx(alpha) per row; returns the 4x4 result.

    dh_rows: iterable of (a, alpha, d, theta_offset).
    """
    transform = np.eye(4)
    for qi, (a, alpha, d, theta_offset) in zip(q, dh_rows):
        transform = (
            transform
            @ _rot_z(qi + theta_offset)
            @ _translate(0.0, 0.0, d)
            @ _translate(a, 0.0, 0.0)
            @ _rot_x(alpha)
        )
    return transform


def quat_wxyz_oracle(matrix: np.ndarray):
    """Quaternion via scipy (independent of the package's own conversion)."""
    from scipy.spatial.transform import Rotation

    x, y, z, w = Rotation.from_matrix(matrix[:3, :3]).as_quat()
    return (w, x, y, z)
