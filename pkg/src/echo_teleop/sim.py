"""Deterministic hardware stand-ins.

A SimWorld bundles the virtual leader device (emitting real protocol frames,
with quantization and seeded uniform ADC noise), a first-order follower arm,
a breakable spring contact ("egg") between the gripper pads, and a minimal
operator surrogate that eases trigger pressure in proportion to the felt
feedback duty.  Identical (seed, script, config) produce bit-identical byte
streams and trajectories.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .control import ControlState, FeedbackGains, force_feedback_duty, teleop_step
from .errors import ConfigInvalid, UnknownScenario
from .kinematics import JointLimits, clamp_to_limits
from .protocol import (
    ForceReport,
    FrameParser,
    Heartbeat,
    JointReport,
    LedCommand,
    MotorCommand,
    encode_frame,
)
from .sensing import (
    adc_to_angle,
    angle_to_counts,
    default_calibration,
    force_to_voltage,
    fsr_model_of,
    voltage_to_force,
    voltage_to_wire_mv,
)
from .types import (
    ADC_MAX,
    NUM_JOINTS,
    Calibration,
    ForceChannelParams,
    JointVector,
    SensitivityMode,
    SlaveCommand,
)

BUNDLED_SCENARIOS = ("egg", "wave")


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs of one simulated session (see the bundled *.cfg files)."""

    script: str = "egg"
    rate_hz: int = 100
    duration_s: float = 6.0
    tau: float = 0.05  # follower time constant, s
    v_max: float = 3.0  # follower joint speed limit, rad/s
    noise_counts: int = 2  # uniform ADC noise amplitude
    seed: int = 1
    operator_gain: float = 0.001  # opening fraction per permille of felt duty
    k: float = 100.0  # contact stiffness, N per unit opening
    x0: float = 0.5  # opening at which the pads first touch the object
    f_break: float = 35.0  # newtons; object breaks above this

    def __post_init__(self):
        if self.script not in SCRIPTS:
            raise ConfigInvalid(f"unknown script {self.script!r}")
        if not 10 <= self.rate_hz <= 1000:
            raise ConfigInvalid("rate_hz must be within [10, 1000]")
        if self.duration_s <= 0:
            raise ConfigInvalid("duration_s must be > 0")
        if self.tau <= 0 or self.v_max <= 0:
            raise ConfigInvalid("tau and v_max must be > 0")
        if self.noise_counts < 0:
            raise ConfigInvalid("noise_counts must be >= 0")
        if self.operator_gain < 0:
            raise ConfigInvalid("operator_gain must be >= 0")
        if self.k < 0:
            raise ConfigInvalid("k must be >= 0")
        if not 0.0 < self.x0 <= 1.0:
            raise ConfigInvalid("x0 must be within (0, 1]")
        if self.f_break <= 0:
            raise ConfigInvalid("f_break must be > 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def dt_us(self) -> int:
        return round(1_000_000 / self.rate_hz)


_CONFIG_TYPES = {
    "script": str,
    "rate_hz": int,
    "duration_s": float,
    "tau": float,
    "v_max": float,
    "noise_counts": int,
    "seed": int,
    "operator_gain": float,
    "k": float,
    "x0": float,
    "f_break": float,
}


def parse_scenario_config(text: str) -> ScenarioConfig:
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {number}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_TYPES:
            raise ConfigInvalid(f"line {number}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_TYPES[key](value)
        except ValueError as exc:
            raise ConfigInvalid(f"line {number}: {exc}") from exc
    return ScenarioConfig(**values)


def load_scenario_config(name_or_path) -> ScenarioConfig:
    """Resolve a bundled scenario name or a config file path."""
    name = str(name_or_path)
    if name in BUNDLED_SCENARIOS:
        text = resources.files("echo_teleop.data").joinpath(f"{name}.cfg").read_text("utf-8")
        return parse_scenario_config(text)
    path = Path(name)
    if path.is_file():
        return parse_scenario_config(path.read_text(encoding="utf-8"))
    raise UnknownScenario(f"no bundled scenario or config file named {name!r}")


def canonical_scenario_text(cfg: ScenarioConfig) -> str:
    """Stable key=value dump used for config hashing and dataset config files."""
    return "".join(
        f"{key} = {getattr(cfg, key)!r}\n" if _CONFIG_TYPES[key] is not str
        else f"{key} = {getattr(cfg, key)}\n"
        for key in sorted(_CONFIG_TYPES)
    )


# --- leader scripts ---------------------------------------------------------


@dataclass(frozen=True)
class DeviceScript:
    """Time-parameterized leader behavior: joints, trigger opening, buttons."""

    joints: object  # t_s -> JointVector
    trigger_opening: object  # t_s -> fraction in [0, 1]
    button_events: tuple = ()  # ((t_s, bits), ...) sorted by time

    def buttons(self, t_s: float) -> int:
        bits = 0
        for at, value in self.button_events:
            if t_s >= at:
                bits = value
            else:
                break
        return bits


def _egg_joints(t_s: float) -> JointVector:
    return (0.0,) * NUM_JOINTS


def _egg_trigger(t_s: float) -> float:
    # hold open, squeeze fully over two seconds, keep squeezing
    if t_s < 0.5:
        return 1.0
    if t_s < 2.5:
        return 1.0 - (t_s - 0.5) / 2.0
    return 0.0


def _wave_joints(t_s: float) -> JointVector:
    return tuple(
        0.8 * math.sin(2.0 * math.pi * 0.2 * t_s + i * math.pi / 6.0)
        for i in range(NUM_JOINTS)
    )


def _wave_trigger(t_s: float) -> float:
    return 0.5 + 0.5 * math.sin(2.0 * math.pi * 0.15 * t_s)


SCRIPTS = {
    "egg": DeviceScript(joints=_egg_joints, trigger_opening=_egg_trigger),
    "wave": DeviceScript(joints=_wave_joints, trigger_opening=_wave_trigger),
}


def make_script(name: str, button_events=()) -> DeviceScript:
    if name not in SCRIPTS:
        raise UnknownScenario(f"unknown script {name!r}")
    base = SCRIPTS[name]
    return replace(base, button_events=tuple(button_events))


# --- virtual leader device --------------------------------------------------


class VirtualDevice:
    """Scripted leader emitting JointReport frames with quantization and noise."""

    def __init__(
        self,
        script: DeviceScript,
        calibration: Calibration,
        noise_counts: int = 0,
        seed: int = 0,
    ):
        self.script = script
        self.calibration = calibration
        self.noise_counts = noise_counts
        self._rng = random.Random(seed)
        self._seq = 0

    def _noisy(self, counts: int) -> int:
        if self.noise_counts:
            counts += self._rng.randint(-self.noise_counts, self.noise_counts)
        return min(ADC_MAX, max(0, counts))

    def trigger_angle(self, opening: float) -> float:
        cal = self.calibration.trigger
        # limit_min is the fully-closed angle, limit_max fully open
        return cal.limit_min + opening * (cal.limit_max - cal.limit_min)

    def sample(self, t_s: float, trigger_opening: float) -> JointReport:
        """One JointReport; the trigger opening already includes operator relief."""
        q = self.script.joints(t_s)
        adc = [
            self._noisy(angle_to_counts(angle, cal))
            for angle, cal in zip(q, self.calibration.joints)
        ]
        adc.append(
            self._noisy(
                angle_to_counts(self.trigger_angle(trigger_opening), self.calibration.trigger)
            )
        )
        report = JointReport(seq=self._seq, adc=tuple(adc), buttons=self.script.buttons(t_s))
        self._seq = (self._seq + 1) % 65536
        return report


# --- follower and contact ---------------------------------------------------


@dataclass(frozen=True)
class FollowerSim:
    """First-order tracking follower; joints in radians, opening a fraction."""

    q: JointVector
    opening: float
    tau: float
    v_max: float
    limits: JointLimits

    def __post_init__(self):
        if self.tau <= 0 or self.v_max <= 0:
            raise ValueError("tau and v_max must be > 0")


def _first_order(current: float, target: float, dt: float, tau: float, v_max: float) -> float:
    move = (target - current) * dt / tau
    cap = v_max * dt
    if move > cap:
        move = cap
    elif move < -cap:
        move = -cap
    return current + move


def follower_step(fs: FollowerSim, cmd: SlaveCommand, dt: float) -> FollowerSim:
    """Advance the follower one tick toward a command; rate- and limit-clamped."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    q = tuple(
        _first_order(current, target, dt, fs.tau, fs.v_max)
        for current, target in zip(fs.q, cmd.q_target)
    )
    q = clamp_to_limits(q, fs.limits)
    opening = _first_order(fs.opening, cmd.gripper_target, dt, fs.tau, fs.v_max)
    opening = min(1.0, max(0.0, opening))
    return replace(fs, q=q, opening=opening)


@dataclass(frozen=True)
class ContactObject:
    """Linear-spring object between the pads; breaking is absorbing."""

    x0: float  # rest opening at first contact
    k: float  # N per unit opening
    f_break: float  # newtons
    broken: bool = False


def contact_force(obj: ContactObject, opening: float) -> tuple:
    """Force for a pad opening; returns (newtons, updated object).

    The breaking sample still reports the force spike that broke the object;
    every later call reports zero.
    """
    if not 0.0 <= opening <= 1.0:
        raise ValueError("opening must be within [0, 1]")
    if obj.broken:
        return 0.0, obj
    force = obj.k * max(0.0, obj.x0 - opening)
    if force > obj.f_break:
        return force, replace(obj, broken=True)
    return force, obj


# --- the composed world -----------------------------------------------------


class SimWorld:
    """Everything on the far side of the wire, advanced in lockstep.

    Host-bound frames (JointReport, ForceReport, Heartbeat) accumulate in an
    outbox; the session drains it through the loopback transport.  Bytes the
    host writes back are parsed device-side into MotorCommand (driving the
    operator-relief model) and LedCommand (tracked for inspection).
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        calibration: Calibration = None,
        force_params: ForceChannelParams = None,
        script: DeviceScript = None,
        limits: JointLimits = None,
    ):
        self.cfg = cfg
        self.calibration = calibration or default_calibration()
        self.force_params = force_params or ForceChannelParams()
        self.script = script or SCRIPTS[cfg.script]
        if limits is None:
            joints = self.calibration.joints
            limits = JointLimits(
                lower=tuple(c.limit_min for c in joints),
                upper=tuple(c.limit_max for c in joints),
                v_max=cfg.v_max,
            )
        self.limits = limits
        self.device = VirtualDevice(
            self.script, self.calibration, cfg.noise_counts, cfg.seed
        )
        q0 = clamp_to_limits(self.script.joints(0.0), limits)
        self.follower = FollowerSim(
            q=q0,
            opening=self.script.trigger_opening(0.0),
            tau=cfg.tau,
            v_max=cfg.v_max,
            limits=limits,
        )
        self.contact = ContactObject(x0=cfg.x0, k=cfg.k, f_break=cfg.f_break)
        self.grip_force = 0.0  # true contact newtons, not the sensor view
        self.peak_force = 0.0
        self.duty = 0
        self.led_mode = int(SensitivityMode.STANDARD)
        self.led_recording = 0
        self._outbox = bytearray()
        self._device_parser = FrameParser()
        self._force_seq = 0
        self._tick = 0

    # -- wire side

    def read_host_bytes(self) -> bytes:
        data = bytes(self._outbox)
        self._outbox.clear()
        return data

    def write_host_bytes(self, data: bytes) -> None:
        messages, _errors = self._device_parser.feed(data)
        for msg in messages:
            if isinstance(msg, MotorCommand):
                self.duty = msg.duty
            elif isinstance(msg, LedCommand):
                self.led_mode = msg.mode
                self.led_recording = msg.recording

    # -- lockstep advancement

    def effective_trigger_opening(self, t_s: float) -> float:
        """Scripted squeeze plus the operator's duty-proportional relief."""
        relief = self.cfg.operator_gain * max(0, self.duty)
        return min(1.0, max(0.0, self.script.trigger_opening(t_s) + relief))

    def emit(self, t_us: int) -> None:
        """Queue this tick's sensor frames for the host."""
        t_s = t_us / 1e6
        report = self.device.sample(t_s, self.effective_trigger_opening(t_s))
        self._outbox += encode_frame(report)
        sensed = min(self.grip_force, self.force_params.f_max)
        volts = force_to_voltage(sensed, fsr_model_of(self.force_params), self.force_params)
        self._outbox += encode_frame(
            ForceReport(seq=self._force_seq, millivolts=voltage_to_wire_mv(volts))
        )
        self._force_seq = (self._force_seq + 1) % 65536
        if self._tick % self.cfg.rate_hz == 0:
            self._outbox += encode_frame(Heartbeat(uptime_ms=t_us // 1000))
        self._tick += 1

    def actuate(self, cmd: SlaveCommand, dt: float) -> None:
        """Apply the follower command and update the contact interaction."""
        self.follower = follower_step(self.follower, cmd, dt)
        self.grip_force, self.contact = contact_force(self.contact, self.follower.opening)
        if self.grip_force > self.peak_force:
            self.peak_force = self.grip_force


# --- headless scenario runner -----------------------------------------------


@dataclass
class ScenarioReport:
    """Outcome of one closed-loop run; forces are true contact newtons."""

    peak_force: float
    broken: bool
    duration: float
    trace: list = field(default_factory=list)  # (t_s, force, duty, opening, trigger)

    def summary(self) -> str:
        return (
            f"peak_force_n={self.peak_force:.6f} broken={str(self.broken).lower()} "
            f"duration_s={self.duration:g}"
        )


def run_scenario(
    cfg: ScenarioConfig,
    ff_enabled: bool,
    gains: FeedbackGains = None,
    calibration: Calibration = None,
    force_params: ForceChannelParams = None,
    collect_trace: bool = True,
) -> ScenarioReport:
    """Run the full closed loop headless: device -> frames -> control ->
    follower -> contact -> force report -> feedback duty -> operator relief."""
    gains = gains or FeedbackGains()
    world = SimWorld(cfg, calibration=calibration, force_params=force_params)
    parser = FrameParser()
    model = fsr_model_of(world.force_params)
    trigger_cal = world.calibration.trigger
    state = None
    last_mv = 0
    angles = None
    trigger_angle = trigger_cal.limit_max
    steps = round(cfg.duration_s * cfg.rate_hz)
    trace = []
    for tick in range(steps):
        t_us = tick * cfg.dt_us
        world.emit(t_us)
        messages, _errors = parser.feed(world.read_host_bytes())
        for msg in messages:
            if isinstance(msg, JointReport):
                angles = tuple(
                    adc_to_angle(c, cal)
                    for c, cal in zip(msg.adc[:NUM_JOINTS], world.calibration.joints)
                )
                trigger_angle = adc_to_angle(msg.adc[NUM_JOINTS], trigger_cal)
            elif isinstance(msg, ForceReport):
                last_mv = msg.millivolts
        if state is None:
            state = ControlState.initial(
                leader_q=angles,
                follower_q=world.follower.q,
                ff_enabled=ff_enabled,
                trigger_closed=trigger_cal.limit_min,
                trigger_open=trigger_cal.limit_max,
            )
        state, cmd = teleop_step(state, angles, trigger_angle, world.limits)
        grip = voltage_to_force(last_mv, model, world.force_params)
        duty = force_feedback_duty(grip, gains, ff_enabled)
        world.write_host_bytes(encode_frame(MotorCommand(duty=duty)))
        world.actuate(cmd, cfg.dt)
        if collect_trace:
            trace.append(
                (
                    t_us / 1e6,
                    world.grip_force,
                    duty,
                    world.follower.opening,
                    cmd.gripper_target,
                )
            )
    return ScenarioReport(
        peak_force=world.peak_force,
        broken=world.contact.broken,
        duration=cfg.duration_s,
        trace=trace,
    )


def run_egg_scenario(cfg: ScenarioConfig, ff_enabled: bool, **kwargs) -> ScenarioReport:
    """The fragile-object comparison scenario (grip the egg, measure the force)."""
    return run_scenario(cfg, ff_enabled, **kwargs)
