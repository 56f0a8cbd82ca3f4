"""Episode dataset capture: start/stop, synchronized samples, text persistence,
and deterministic replay.

One file per episode plus a session-level manifest (see docs/dataset.md).
Rows are comma-separated decimal values; floats are printed with Python's
shortest round-trip representation so that save -> load -> save is
byte-identical and replay can reproduce trajectories bit-for-bit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    AlreadyRecording,
    ConfigMismatch,
    MalformedRow,
    NonMonotonicTimestamp,
    NotRecording,
    StorageFailure,
    VersionMismatch,
)
from .sim import FollowerSim, follower_step
from .types import NUM_JOINTS, JointVector, Pose, SlaveCommand

FORMAT_NAME = "echo-episode"
FORMAT_VERSION = 1
EPISODE_HEADER = f"{FORMAT_NAME} v{FORMAT_VERSION}"
MANIFEST_NAME = "manifest.txt"
EPISODE_GLOB = "episode_*.csv"

# One row = 30 comma-separated fields, in this exact order.
ROW_FIELDS = (
    ["t_us"]
    + [f"leader_q{i}" for i in range(NUM_JOINTS)]
    + [f"cmd_q{i}" for i in range(NUM_JOINTS)]
    + [f"measured_q{i}" for i in range(NUM_JOINTS)]
    + ["ee_px", "ee_py", "ee_pz", "ee_qw", "ee_qx", "ee_qy", "ee_qz"]
    + ["gripper_cmd", "grip_force", "mode", "ff_enabled"]
)


@dataclass(frozen=True)
class EpisodeRecord:
    """One timestamped dataset row."""

    t_us: int  # microseconds since episode start, strictly increasing
    leader_q: JointVector
    cmd_q: JointVector
    measured_q: JointVector
    ee_pose: Pose  # forward kinematics of measured_q
    gripper_cmd: float
    grip_force: float
    mode: int  # sensitivity divisor in effect
    ff_enabled: bool


@dataclass
class EpisodeManifest:
    episode_id: int
    start_time: str  # wall-clock ISO-8601
    samples: int
    duration_us: int
    status: str  # "completed" or "aborted"
    config_hash: str
    dropped: int = 0


def _fmt(value: float) -> str:
    return repr(float(value))


def format_record(rec: EpisodeRecord) -> str:
    parts = [str(rec.t_us)]
    parts += [_fmt(v) for v in rec.leader_q]
    parts += [_fmt(v) for v in rec.cmd_q]
    parts += [_fmt(v) for v in rec.measured_q]
    parts += [_fmt(v) for v in rec.ee_pose.position]
    parts += [_fmt(v) for v in rec.ee_pose.orientation]
    parts += [_fmt(rec.gripper_cmd), _fmt(rec.grip_force)]
    parts += [str(rec.mode), str(int(rec.ff_enabled))]
    return ",".join(parts)


def parse_record(line: str, line_number: int) -> EpisodeRecord:
    parts = line.split(",")
    if len(parts) != len(ROW_FIELDS):
        raise MalformedRow(
            f"expected {len(ROW_FIELDS)} fields, got {len(parts)}", line_number
        )
    try:
        t_us = int(parts[0])
        floats = [float(p) for p in parts[1:26]]
        gripper_cmd = float(parts[26])
        grip_force = float(parts[27])
        mode = int(parts[28])
        ff_enabled = bool(int(parts[29]))
    except ValueError as exc:
        raise MalformedRow(str(exc), line_number) from exc
    if not all(math.isfinite(v) for v in floats):
        raise MalformedRow("non-finite value", line_number)
    try:
        pose = Pose(position=tuple(floats[18:21]), orientation=tuple(floats[21:25]))
    except ValueError as exc:
        raise MalformedRow(str(exc), line_number) from exc
    return EpisodeRecord(
        t_us=t_us,
        leader_q=tuple(floats[0:6]),
        cmd_q=tuple(floats[6:12]),
        measured_q=tuple(floats[12:18]),
        ee_pose=pose,
        gripper_cmd=gripper_cmd,
        grip_force=grip_force,
        mode=mode,
        ff_enabled=ff_enabled,
    )


def save_episode(path, records) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(EPISODE_HEADER + "\n")
            for rec in records:
                fh.write(format_record(rec) + "\n")
    except OSError as exc:
        raise StorageFailure(str(exc)) from exc


def load_episode(path) -> list:
    """Parse an episode file into records; validates version and monotonic time."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageFailure(str(exc)) from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise VersionMismatch("empty file, missing header")
    header = lines[0]
    match = re.fullmatch(rf"{FORMAT_NAME} v(\d+)", header)
    if not match:
        raise VersionMismatch(f"unrecognized header {header!r}")
    if int(match.group(1)) != FORMAT_VERSION:
        raise VersionMismatch(
            f"file version {match.group(1)}, reader supports v{FORMAT_VERSION}"
        )
    records = []
    last_t = None
    for index, line in enumerate(lines[1:], start=2):
        rec = parse_record(line, index)
        if last_t is not None and rec.t_us <= last_t:
            raise MalformedRow(f"timestamp {rec.t_us} not after {last_t}", index)
        last_t = rec.t_us
        records.append(rec)
    return records


class EpisodeWriter:
    """Open episode file; appends are flushed so a crash loses at most one row."""

    def __init__(self, path, episode_id: int, config_hash: str):
        self.path = Path(path)
        self.episode_id = episode_id
        self.config_hash = config_hash
        self.start_time = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.samples = 0
        self.last_t_us = None
        try:
            self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
            self._fh.write(EPISODE_HEADER + "\n")
            self._fh.flush()
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def append_sample(self, rec: EpisodeRecord) -> None:
        if self.last_t_us is not None and rec.t_us <= self.last_t_us:
            raise NonMonotonicTimestamp(
                f"t {rec.t_us} us does not advance past {self.last_t_us} us"
            )
        try:
            self._fh.write(format_record(rec) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc
        self.last_t_us = rec.t_us
        self.samples += 1

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc


def _manifest_line(manifest: EpisodeManifest) -> str:
    return (
        f"episode={manifest.episode_id} start={manifest.start_time} "
        f"samples={manifest.samples} duration_us={manifest.duration_us} "
        f"status={manifest.status} config={manifest.config_hash} "
        f"dropped={manifest.dropped}"
    )


def parse_manifest_line(line: str) -> EpisodeManifest:
    fields = dict(item.split("=", 1) for item in line.split())
    return EpisodeManifest(
        episode_id=int(fields["episode"]),
        start_time=fields["start"],
        samples=int(fields["samples"]),
        duration_us=int(fields["duration_us"]),
        status=fields["status"],
        config_hash=fields["config"],
        dropped=int(fields.get("dropped", "0")),
    )


def load_manifest(directory) -> list:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        return []
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            entries.append(parse_manifest_line(line))
    return entries


def episode_path(directory, episode_id: int) -> Path:
    return Path(directory) / f"episode_{episode_id}.csv"


class SessionRecorder:
    """Owns one dataset directory: episode ids, the manifest, crash recovery."""

    def __init__(self, directory, config_hash: str):
        self.directory = Path(directory)
        self.config_hash = config_hash
        self._active = None
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc
        self._recover_aborted()

    def _known_ids(self):
        return {entry.episode_id for entry in load_manifest(self.directory)}

    def _file_ids(self):
        ids = []
        for path in self.directory.glob(EPISODE_GLOB):
            match = re.fullmatch(r"episode_(\d+)\.csv", path.name)
            if match:
                ids.append(int(match.group(1)))
        return ids

    def _recover_aborted(self) -> None:
        """Mark episode files that never reached end_episode as aborted."""
        known = self._known_ids()
        for episode_id in sorted(self._file_ids()):
            if episode_id in known:
                continue
            path = episode_path(self.directory, episode_id)
            samples = 0
            duration = 0
            try:
                records = load_episode(path)
                samples = len(records)
                duration = records[-1].t_us if records else 0
            except (MalformedRow, VersionMismatch):
                pass  # truncated final row; count what parses
            self._append_manifest(
                EpisodeManifest(
                    episode_id=episode_id,
                    start_time="unknown",
                    samples=samples,
                    duration_us=duration,
                    status="aborted",
                    config_hash=self.config_hash,
                )
            )

    def _append_manifest(self, manifest: EpisodeManifest) -> None:
        try:
            with open(self.directory / MANIFEST_NAME, "a", encoding="utf-8") as fh:
                fh.write(_manifest_line(manifest) + "\n")
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    @property
    def recording(self) -> bool:
        return self._active is not None

    @property
    def active_episode_id(self):
        return self._active.episode_id if self._active else None

    def start_episode(self) -> EpisodeWriter:
        if self._active is not None:
            raise AlreadyRecording(
                f"episode {self._active.episode_id} is still open"
            )
        next_id = max(self._known_ids() | set(self._file_ids()), default=0) + 1
        writer = EpisodeWriter(
            episode_path(self.directory, next_id), next_id, self.config_hash
        )
        self._active = writer
        return writer

    def append_sample(self, rec: EpisodeRecord) -> None:
        if self._active is None:
            raise NotRecording("no open episode")
        self._active.append_sample(rec)

    def end_episode(self, dropped: int = 0) -> EpisodeManifest:
        if self._active is None:
            raise NotRecording("no open episode")
        writer = self._active
        writer.close()
        manifest = EpisodeManifest(
            episode_id=writer.episode_id,
            start_time=writer.start_time,
            samples=writer.samples,
            duration_us=writer.last_t_us or 0,
            status="completed",
            config_hash=writer.config_hash,
            dropped=dropped,
        )
        self._append_manifest(manifest)
        self._active = None
        return manifest


def replay(
    records,
    follower: FollowerSim,
    dt: float,
    sim_config_hash: str = None,
    episode_config_hash: str = None,
) -> list:
    """Re-run recorded commands through the follower model.

    The follower starts from the first recorded measured state; feeding the
    recorded command stream back in reproduces measured_q bit-for-bit when
    the configuration matches.  Returns the replayed joint trajectory.
    """
    if (
        sim_config_hash is not None
        and episode_config_hash is not None
        and sim_config_hash != episode_config_hash
    ):
        raise ConfigMismatch(
            f"episode config {episode_config_hash} != sim config {sim_config_hash}"
        )
    if not records:
        return []
    state = replace(
        follower, q=records[0].measured_q, opening=records[0].gripper_cmd
    )
    trajectory = [state.q]
    for rec in records[1:]:
        cmd = SlaveCommand(q_target=rec.cmd_q, gripper_target=rec.gripper_cmd)
        state = follower_step(state, cmd, dt)
        trajectory.append(state.q)
    return trajectory


def episode_stats(records) -> dict:
    """Summary statistics used by `dataset inspect`."""
    if not records:
        return {"samples": 0, "duration_s": 0.0, "mean_force_n": 0.0, "peak_force_n": 0.0}
    forces = [rec.grip_force for rec in records]
    return {
        "samples": len(records),
        "duration_s": records[-1].t_us / 1e6,
        "mean_force_n": sum(forces) / len(forces),
        "peak_force_n": max(forces),
    }
