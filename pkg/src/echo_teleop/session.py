"""One teleoperation session: transport in, control law, follower, recorder,
telemetry out.

The control loop is a single logical thread owning all mutable state.  Remote
commands are queued and applied atomically between ticks, through the same
event types the physical buttons produce.  In lockstep mode (sim transports,
tests, headless runs) logical time advances tick by tick and everything is
deterministic; in realtime mode the loop paces itself against the wall clock
and episode writes are pumped through a bounded queue so file I/O never
blocks the loop.
"""

from __future__ import annotations

import hashlib
import queue
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .control import (
    ControlState,
    Event,
    FeedbackGains,
    cycle_sensitivity,
    detect_button_events,
    force_feedback_duty,
    teleop_step,
)
from .errors import AlreadyRecording, ConfigInvalid, InvalidMode, NotRecording
from .kinematics import DhTable, JointLimits, forward_kinematics, ur3_dh_table
from .protocol import (
    ForceReport,
    FrameParser,
    JointReport,
    LedCommand,
    MotorCommand,
    encode_frame,
)
from .recorder import EpisodeRecord, SessionRecorder
from .sensing import (
    adc_to_angle,
    default_calibration,
    fsr_model_of,
    load_calibration,
    voltage_to_force,
)
from .sim import FollowerSim, ScenarioConfig, follower_step
from .transport import LoopbackTransport, open_transport
from .types import (
    NUM_JOINTS,
    Calibration,
    ForceChannelParams,
    MasterState,
    SensitivityMode,
)

DEFAULT_TCP_PORT = 7420
DEFAULT_HTTP_PORT = 7421
DATASET_ENV_VAR = "ECHO_DATA_DIR"
CONFIG_FILE_NAME = "config.txt"


@dataclass
class SessionConfig:
    """User-facing session settings (CLI flags map 1:1 onto these)."""

    transport: str = "sim:wave"
    calibration_path: str = None
    dataset_dir: str = "dataset"
    rate_hz: int = 100
    gains: FeedbackGains = field(default_factory=FeedbackGains)
    initial_mode: int = 1
    ff_enabled: bool = True
    baud: int = 115200
    realtime: bool = True
    duration_s: float = None
    port: int = DEFAULT_TCP_PORT
    http_port: int = DEFAULT_HTTP_PORT
    ui_dir: str = None

    def __post_init__(self):
        if not 10 <= self.rate_hz <= 1000:
            raise ConfigInvalid("rate_hz must be within [10, 1000]")
        if self.initial_mode not in (1, 2, 4):
            raise InvalidMode(f"initial mode {self.initial_mode} not in {{1, 2, 4}}")


@dataclass(frozen=True)
class TelemetrySnapshot:
    """All fields sampled on the same control tick."""

    t_us: int
    leader_q: tuple
    cmd_q: tuple
    gripper_cmd: float
    measured_q: tuple
    ee_pos: tuple
    ee_quat: tuple
    force: float
    mode: int
    recording: bool
    episode: int  # or None when idle
    ff: bool
    dropped: int

    def to_json_obj(self) -> dict:
        return {
            "type": "telemetry",
            "t": self.t_us,
            "leader_q": list(self.leader_q),
            "cmd_q": list(self.cmd_q),
            "gripper": self.gripper_cmd,
            "measured_q": list(self.measured_q),
            "ee_pos": list(self.ee_pos),
            "ee_quat": list(self.ee_quat),
            "force": self.force,
            "mode": self.mode,
            "recording": self.recording,
            "episode": self.episode,
            "ff": self.ff,
            "dropped": self.dropped,
        }


@dataclass
class ResolvedSession:
    """SessionConfig with every file loaded and every default applied."""

    config: SessionConfig
    calibration: Calibration
    force_params: ForceChannelParams
    dh: DhTable
    limits: JointLimits
    follower_tau: float
    follower_v_max: float
    scenario: ScenarioConfig  # None on serial transports
    config_hash: str
    config_text: str


def limits_from_calibration(calibration: Calibration, v_max: float) -> JointLimits:
    joints = calibration.joints
    return JointLimits(
        lower=tuple(c.limit_min for c in joints),
        upper=tuple(c.limit_max for c in joints),
        v_max=v_max,
    )


def canonical_config_text(
    config: SessionConfig,
    calibration: Calibration,
    force_params: ForceChannelParams,
    dh: DhTable,
    tau: float,
    v_max: float,
    scenario: ScenarioConfig = None,
) -> str:
    """Flat, sorted key=value dump of every value that shapes the physics.

    Floats use repr so the dump parses back bit-exactly; the sha-256 of this
    text is the session's config hash.
    """
    entries = {}
    for index, channel in enumerate(calibration.channels):
        name = f"joint{index}" if index < NUM_JOINTS else "trigger"
        entries[f"calibration.{name}.offset"] = repr(channel.offset)
        entries[f"calibration.{name}.scale"] = repr(channel.scale)
        entries[f"calibration.{name}.sign"] = str(channel.sign)
        entries[f"calibration.{name}.limit_min"] = repr(channel.limit_min)
        entries[f"calibration.{name}.limit_max"] = repr(channel.limit_max)
    entries["force.v_ref"] = repr(force_params.v_ref)
    entries["force.r_g"] = repr(force_params.r_g)
    entries["force.g0"] = repr(force_params.g0)
    entries["force.c"] = repr(force_params.c)
    entries["force.f_max"] = repr(force_params.f_max)
    for index, row in enumerate(dh.rows):
        entries[f"dh.{index}.a"] = repr(row.a)
        entries[f"dh.{index}.alpha"] = repr(row.alpha)
        entries[f"dh.{index}.d"] = repr(row.d)
        entries[f"dh.{index}.theta_offset"] = repr(row.theta_offset)
    entries["follower.tau"] = repr(tau)
    entries["follower.v_max"] = repr(v_max)
    entries["gains.k_f"] = repr(config.gains.k_f)
    entries["gains.duty_max"] = str(config.gains.duty_max)
    entries["gains.deadband"] = repr(config.gains.deadband)
    entries["session.rate_hz"] = str(config.rate_hz)
    entries["session.initial_mode"] = str(config.initial_mode)
    entries["session.ff_enabled"] = str(int(config.ff_enabled))
    entries["session.transport"] = config.transport
    if scenario is not None:
        entries["scenario.script"] = scenario.script
        entries["scenario.rate_hz"] = str(scenario.rate_hz)
        entries["scenario.duration_s"] = repr(scenario.duration_s)
        entries["scenario.tau"] = repr(scenario.tau)
        entries["scenario.v_max"] = repr(scenario.v_max)
        entries["scenario.noise_counts"] = str(scenario.noise_counts)
        entries["scenario.seed"] = str(scenario.seed)
        entries["scenario.operator_gain"] = repr(scenario.operator_gain)
        entries["scenario.k"] = repr(scenario.k)
        entries["scenario.x0"] = repr(scenario.x0)
        entries["scenario.f_break"] = repr(scenario.f_break)
    return "".join(f"{key} = {entries[key]}\n" for key in sorted(entries))


def config_hash_of(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def follower_from_config_values(values: dict) -> tuple:
    """(FollowerSim template, dt seconds) rebuilt from a dataset config dump."""
    lower = tuple(
        float(values[f"calibration.joint{i}.limit_min"]) for i in range(NUM_JOINTS)
    )
    upper = tuple(
        float(values[f"calibration.joint{i}.limit_max"]) for i in range(NUM_JOINTS)
    )
    v_max = float(values["follower.v_max"])
    limits = JointLimits(lower=lower, upper=upper, v_max=v_max)
    follower = FollowerSim(
        q=(0.0,) * NUM_JOINTS,
        opening=1.0,
        tau=float(values["follower.tau"]),
        v_max=v_max,
        limits=limits,
    )
    return follower, 1.0 / int(values["session.rate_hz"])


def resolve_session(config: SessionConfig) -> ResolvedSession:
    if config.calibration_path:
        calibration, force_params = load_calibration(config.calibration_path)
    else:
        calibration, force_params = default_calibration(), ForceChannelParams()
    dh = ur3_dh_table()
    scenario = None
    if config.transport.startswith("sim:"):
        from .sim import load_scenario_config

        scenario = load_scenario_config(config.transport[len("sim:") :])
        tau, v_max = scenario.tau, scenario.v_max
    else:
        tau, v_max = 0.05, 3.0
    limits = limits_from_calibration(calibration, v_max)
    text = canonical_config_text(
        config, calibration, force_params, dh, tau, v_max, scenario
    )
    return ResolvedSession(
        config=config,
        calibration=calibration,
        force_params=force_params,
        dh=dh,
        limits=limits,
        follower_tau=tau,
        follower_v_max=v_max,
        scenario=scenario,
        config_hash=config_hash_of(text),
        config_text=text,
    )


class _RecorderPump:
    """Bounded queue between the control loop and episode file writes."""

    def __init__(self, recorder: SessionRecorder, maxsize: int = 512):
        self.recorder = recorder
        self.queue = queue.Queue(maxsize=maxsize)
        self.dropped = 0
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._stop = threading.Event()
        self._thread.start()

    def _run(self):
        while True:
            try:
                item = self.queue.get(timeout=0.1)
            except queue.Empty:
                if self._stop.is_set():
                    return
                continue
            try:
                self.recorder.append_sample(item)
            finally:
                self.queue.task_done()

    def append(self, record: EpisodeRecord) -> None:
        try:
            self.queue.put_nowait(record)
        except queue.Full:
            self.dropped += 1

    def drain(self) -> None:
        self.queue.join()

    def close(self) -> None:
        self._stop.set()
        self._thread.join()


class SessionRunner:
    """Owns the control loop; everything mutable lives on this one thread."""

    def __init__(self, resolved: ResolvedSession):
        self.resolved = resolved
        self.config = resolved.config
        self.transport = open_transport(
            self.config.transport,
            baud=self.config.baud,
            calibration=resolved.calibration,
            force_params=resolved.force_params,
        )
        self.world = (
            self.transport.world if isinstance(self.transport, LoopbackTransport) else None
        )
        self.parser = FrameParser()
        self.recorder = SessionRecorder(self.config.dataset_dir, resolved.config_hash)
        self._write_config_file()
        self._pump = None
        if self.config.realtime:
            self._pump = _RecorderPump(self.recorder)
        if self.world is not None:
            self.follower = self.world.follower
        else:
            self.follower = FollowerSim(
                q=(0.0,) * NUM_JOINTS,
                opening=1.0,
                tau=resolved.follower_tau,
                v_max=resolved.follower_v_max,
                limits=resolved.limits,
            )
        self.state = None
        self.latest_master = None
        self.last_mv = 0
        self.grip_force = 0.0
        self.tick_index = 0
        self.dt = 1.0 / self.config.rate_hz
        self.dt_us = round(1_000_000 / self.config.rate_hz)
        self.episode_start_us = 0
        self.seq_gaps = 0
        self._last_seq = None
        self._fsr = fsr_model_of(resolved.force_params)
        self._commands = queue.Queue()
        self._pending_drop_count = 0

    # -- configuration artifacts

    def _write_config_file(self) -> None:
        path = Path(self.config.dataset_dir) / CONFIG_FILE_NAME
        path.write_text(self.resolved.config_text, encoding="utf-8")

    # -- remote command path

    def submit_command(self, name: str, args: dict, reply) -> None:
        """Queue a command for atomic application between ticks.

        reply is a callable receiving the ack dict.
        """
        self._commands.put((name, args, reply))

    def _state_summary(self) -> dict:
        return {
            "mode": self.state.mode.value if self.state else self.config.initial_mode,
            "recording": self.recorder.recording,
            "ff": self.state.ff_enabled if self.state else self.config.ff_enabled,
            "episode": self.recorder.active_episode_id,
        }

    def _apply_command(self, name: str, args: dict) -> list:
        """Translate a remote command into the same events buttons produce."""
        events = []
        if name == "start_recording":
            if self.recorder.recording:
                raise AlreadyRecording("an episode is already open")
            events.append(Event.RECORD_TOGGLE)
        elif name == "stop_recording":
            if not self.recorder.recording:
                raise NotRecording("no episode is open")
            events.append(Event.RECORD_TOGGLE)
        elif name == "set_mode":
            target = args.get("mode")
            if target not in (1, 2, 4):
                raise InvalidMode(f"mode {target!r} not in {{1, 2, 4}}")
            mode = self.state.mode if self.state else SensitivityMode(self.config.initial_mode)
            while mode.value != target:
                events.append(Event.SENSITIVITY_CYCLE)
                mode = mode.next()
        elif name == "set_force_feedback":
            enabled = bool(args.get("enabled"))
            if self.state is not None:
                self.state = replace(self.state, ff_enabled=enabled)
            else:
                self.config.ff_enabled = enabled
        else:
            raise ConfigInvalid(f"unknown command {name!r}")
        return events

    def _drain_commands(self) -> list:
        events = []
        while True:
            try:
                name, args, reply = self._commands.get_nowait()
            except queue.Empty:
                return events
            try:
                events.extend(self._apply_command(name, args))
            except Exception as exc:  # ack the failure, keep the loop alive
                reply(
                    {
                        "type": "ack",
                        "ok": False,
                        "cmd": name,
                        "error": type(exc).__name__,
                        "message": str(exc),
                    }
                )
                continue
            self._deferred_acks.append((name, reply))

    # -- recording

    def _toggle_recording(self, t_us: int) -> None:
        if self.recorder.recording:
            if self._pump:
                self._pump.drain()
            self.recorder.end_episode(dropped=self._pending_drop_count)
            self._pending_drop_count = 0
            if self._pump:
                self._pump.dropped = 0
        else:
            self.recorder.start_episode()
            self.episode_start_us = t_us
        self.transport.write(
            encode_frame(
                LedCommand(
                    mode=self.state.mode.value,
                    recording=int(self.recorder.recording),
                )
            )
        )

    def _append_record(self, record: EpisodeRecord) -> None:
        if self._pump:
            self._pump.append(record)
            self._pending_drop_count = self._pump.dropped
        else:
            self.recorder.append_sample(record)

    # -- the tick

    def tick(self) -> TelemetrySnapshot:
        """Advance one control period; returns None until frames arrive."""
        t_us = self.tick_index * self.dt_us
        self._deferred_acks = []
        if self.world is not None:
            self.world.emit(t_us)
        messages, _errors = self.parser.feed(self.transport.read())
        for msg in messages:
            if isinstance(msg, JointReport):
                if self._last_seq is not None:
                    expected = (self._last_seq + 1) % 65536
                    if msg.seq != expected:
                        self.seq_gaps += 1
                self._last_seq = msg.seq
                self.latest_master = MasterState(
                    seq=msg.seq, adc=msg.adc, buttons=msg.buttons, rx_time_us=t_us
                )
            elif isinstance(msg, ForceReport):
                self.last_mv = msg.millivolts
        if self.latest_master is None:
            self.tick_index += 1
            return None

        calibration = self.resolved.calibration
        angles = tuple(
            adc_to_angle(c, cal)
            for c, cal in zip(self.latest_master.adc[:NUM_JOINTS], calibration.joints)
        )
        trigger_angle = adc_to_angle(
            self.latest_master.adc[NUM_JOINTS], calibration.trigger
        )
        if self.state is None:
            self.state = ControlState.initial(
                leader_q=angles,
                follower_q=self.follower.q,
                mode=SensitivityMode(self.config.initial_mode),
                ff_enabled=self.config.ff_enabled,
                trigger_closed=calibration.trigger.limit_min,
                trigger_open=calibration.trigger.limit_max,
            )
            self.transport.write(
                encode_frame(LedCommand(mode=self.state.mode.value, recording=0))
            )

        events = detect_button_events(self.state.prev_buttons, self.latest_master.buttons)
        self.state = replace(self.state, prev_buttons=self.latest_master.buttons)
        events.extend(self._drain_commands())
        for event in events:
            if event is Event.RECORD_TOGGLE:
                self._toggle_recording(t_us)
            elif event is Event.SENSITIVITY_CYCLE:
                self.state = cycle_sensitivity(self.state)
                self.transport.write(
                    encode_frame(
                        LedCommand(
                            mode=self.state.mode.value,
                            recording=int(self.recorder.recording),
                        )
                    )
                )

        self.state, cmd = teleop_step(self.state, angles, trigger_angle, self.resolved.limits)
        self.grip_force = voltage_to_force(
            self.last_mv, self._fsr, self.resolved.force_params
        )
        duty = force_feedback_duty(
            self.grip_force, self.config.gains, self.state.ff_enabled
        )
        self.transport.write(encode_frame(MotorCommand(duty=duty)))

        if self.world is not None:
            self.world.actuate(cmd, self.dt)
            self.follower = self.world.follower
        else:
            self.follower = follower_step(self.follower, cmd, self.dt)

        measured = self.follower.q
        ee_pose = forward_kinematics(measured, self.resolved.dh)
        if self.recorder.recording:
            self._append_record(
                EpisodeRecord(
                    t_us=t_us - self.episode_start_us,
                    leader_q=angles,
                    cmd_q=cmd.q_target,
                    measured_q=measured,
                    ee_pose=ee_pose,
                    gripper_cmd=cmd.gripper_target,
                    grip_force=self.grip_force,
                    mode=self.state.mode.value,
                    ff_enabled=self.state.ff_enabled,
                )
            )
        snapshot = TelemetrySnapshot(
            t_us=t_us,
            leader_q=angles,
            cmd_q=cmd.q_target,
            gripper_cmd=cmd.gripper_target,
            measured_q=measured,
            ee_pos=ee_pose.position,
            ee_quat=ee_pose.orientation,
            force=self.grip_force,
            mode=self.state.mode.value,
            recording=self.recorder.recording,
            episode=self.recorder.active_episode_id,
            ff=self.state.ff_enabled,
            dropped=self._pending_drop_count,
        )
        for name, reply in self._deferred_acks:
            reply({"type": "ack", "ok": True, "cmd": name, "state": self._state_summary()})
        self._deferred_acks = []
        self.tick_index += 1
        return snapshot

    def run(self, stop_event: threading.Event = None, on_snapshot=None) -> None:
        """Drive ticks until duration or stop; paces the wall clock if realtime."""
        total = None
        if self.config.duration_s is not None:
            total = round(self.config.duration_s * self.config.rate_hz)
        deadline = time.monotonic()
        while True:
            if stop_event is not None and stop_event.is_set():
                break
            if total is not None and self.tick_index >= total:
                break
            snapshot = self.tick()
            if snapshot is not None and on_snapshot is not None:
                on_snapshot(snapshot)
            if self.config.realtime:
                deadline += self.dt
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        self.close()

    def close(self) -> None:
        if self.recorder.recording:
            if self._pump:
                self._pump.drain()
            self.recorder.end_episode(dropped=self._pending_drop_count)
        if self._pump:
            self._pump.close()
            self._pump = None
        self.transport.close()

    # quick helpers for scripted runs

    def record_for(self, duration_s: float) -> None:
        """Lockstep: record exactly duration_s * rate samples, then stop."""
        samples = round(duration_s * self.config.rate_hz)
        started = False
        while not started:
            # wait for the first JointReport before toggling recording
            snapshot = self.tick()
            if self.state is not None:
                self.submit_command("start_recording", {}, lambda ack: None)
                started = True
        recorded = 0
        while recorded < samples:
            snapshot = self.tick()
            if snapshot is not None and snapshot.recording:
                recorded += 1
        self.submit_command("stop_recording", {}, lambda ack: None)
        self.tick()
        self.close()
