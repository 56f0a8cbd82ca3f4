"""Follower-arm forward kinematics (standard Denavit-Hartenberg) and joint limits.

The DH table ships as a config file (6 lines of `a alpha d theta_offset`,
SI units and radians; see docs/kinematics.md).  The default table carries the
published UR3 parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .types import NUM_JOINTS, JointVector, Pose, joint_vector


@dataclass(frozen=True)
class DhRow:
    a: float  # link length, m
    alpha: float  # link twist, rad
    d: float  # link offset, m
    theta_offset: float  # joint variable offset, rad

    def __post_init__(self):
        for v in (self.a, self.alpha, self.d, self.theta_offset):
            if not math.isfinite(v):
                raise ValueError("DH entries must be finite")


@dataclass(frozen=True)
class DhTable:
    rows: tuple  # exactly NUM_JOINTS DhRow entries

    def __post_init__(self):
        if len(self.rows) != NUM_JOINTS:
            raise ValueError(f"expected {NUM_JOINTS} DH rows, got {len(self.rows)}")

    def reach(self) -> float:
        """Upper bound on end-effector distance from base: sum of |a| + |d|."""
        return sum(abs(r.a) + abs(r.d) for r in self.rows)


@dataclass(frozen=True)
class JointLimits:
    lower: tuple  # per-joint minimum, rad
    upper: tuple  # per-joint maximum, rad
    v_max: float  # rad/s

    def __post_init__(self):
        if len(self.lower) != NUM_JOINTS or len(self.upper) != NUM_JOINTS:
            raise ValueError(f"expected {NUM_JOINTS} limit entries")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("each lower limit must be < its upper limit")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")


def _dh_transform(theta: float, row: DhRow) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def quaternion_from_rotation(rot: np.ndarray) -> tuple:
    """Unit quaternion (w, x, y, z) of a rotation matrix, canonicalized to w >= 0."""
    trace = rot[0, 0] + rot[1, 1] + rot[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        w = 0.25 * s
        x = (rot[2, 1] - rot[1, 2]) / s
        y = (rot[0, 2] - rot[2, 0]) / s
        z = (rot[1, 0] - rot[0, 1]) / s
    elif rot[0, 0] > rot[1, 1] and rot[0, 0] > rot[2, 2]:
        s = math.sqrt(1.0 + rot[0, 0] - rot[1, 1] - rot[2, 2]) * 2.0
        w = (rot[2, 1] - rot[1, 2]) / s
        x = 0.25 * s
        y = (rot[0, 1] + rot[1, 0]) / s
        z = (rot[0, 2] + rot[2, 0]) / s
    elif rot[1, 1] > rot[2, 2]:
        s = math.sqrt(1.0 + rot[1, 1] - rot[0, 0] - rot[2, 2]) * 2.0
        w = (rot[0, 2] - rot[2, 0]) / s
        x = (rot[0, 1] + rot[1, 0]) / s
        y = 0.25 * s
        z = (rot[1, 2] + rot[2, 1]) / s
    else:
        s = math.sqrt(1.0 + rot[2, 2] - rot[0, 0] - rot[1, 1]) * 2.0
        w = (rot[1, 0] - rot[0, 1]) / s
        x = (rot[0, 2] + rot[2, 0]) / s
        y = (rot[1, 2] + rot[2, 1]) / s
        z = 0.25 * s
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    q = (w / norm, x / norm, y / norm, z / norm)
    if q[0] < 0.0:
        q = (-q[0], -q[1], -q[2], -q[3])
    return q


def forward_kinematics(q: JointVector, dh: DhTable) -> Pose:
    """Pose of frame 6 in the base frame via the standard DH transform chain."""
    transform = np.eye(4)
    for qi, row in zip(q, dh.rows):
        transform = transform @ _dh_transform(qi + row.theta_offset, row)
    position = (float(transform[0, 3]), float(transform[1, 3]), float(transform[2, 3]))
    return Pose(position=position, orientation=quaternion_from_rotation(transform[:3, :3]))


def clamp_to_limits(q: JointVector, limits: JointLimits) -> JointVector:
    """Per-joint clamp into [lower, upper]; idempotent."""
    return tuple(
        min(hi, max(lo, v)) for v, lo, hi in zip(q, limits.lower, limits.upper)
    )


def max_step(q_prev: JointVector, q_next: JointVector, v_max: float, dt: float) -> JointVector:
    """Move each joint toward q_next by at most v_max * dt."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    step = v_max * dt
    out = []
    for prev, target in zip(q_prev, q_next):
        delta = target - prev
        if delta > step:
            delta = step
        elif delta < -step:
            delta = -step
        out.append(prev + delta)
    return tuple(out)


def parse_dh_table(text: str) -> DhTable:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"expected 4 columns `a alpha d theta_offset`, got: {line!r}")
        a, alpha, d, theta_offset = (float(p) for p in parts)
        rows.append(DhRow(a=a, alpha=alpha, d=d, theta_offset=theta_offset))
    return DhTable(rows=tuple(rows))


def load_dh_table(path) -> DhTable:
    return parse_dh_table(Path(path).read_text(encoding="utf-8"))


def ur3_dh_table() -> DhTable:
    """The UR3 table bundled with the package."""
    text = resources.files("echo_teleop.data").joinpath("ur3_dh.txt").read_text("utf-8")
    return parse_dh_table(text)


def default_joint_limits(v_max: float = 3.0) -> JointLimits:
    """Symmetric 150-degree limits matching the default calibration travel."""
    bound = math.radians(150.0)
    return JointLimits(
        lower=joint_vector((-bound,) * NUM_JOINTS),
        upper=joint_vector((bound,) * NUM_JOINTS),
        v_max=v_max,
    )
