"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion.  Every tolerance and runtime budget is asserted, not just printed.
"""

import math
import random
import time
from dataclasses import replace

import pytest

from echo_teleop.control import ControlState, cycle_sensitivity, teleop_step
from echo_teleop.kinematics import JointLimits, forward_kinematics, ur3_dh_table
from echo_teleop.protocol import FrameParser, crc16, encode_frame
from echo_teleop.recorder import load_episode, load_manifest, replay, save_episode
from echo_teleop.sensing import (
    force_to_voltage,
    fsr_model_of,
    linearized_voltage,
    voltage_to_force,
)
from echo_teleop.session import (
    CONFIG_FILE_NAME,
    SessionConfig,
    SessionRunner,
    follower_from_config_values,
    parse_config_text,
    resolve_session,
)
from echo_teleop.sim import load_scenario_config, run_egg_scenario
from echo_teleop.types import ForceChannelParams, SensitivityMode
from helpers import fk_oracle_matrix, quat_wxyz_oracle, random_message


def _report(name: str, started: float, budget: float) -> None:
    elapsed = time.perf_counter() - started
    assert elapsed < budget, f"{name} took {elapsed:.2f}s, budget {budget}s"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s < {budget}s)")


def test_force_linearization_chain():
    """Current-to-voltage stage identities and the force round trip."""
    started = time.perf_counter()
    params = ForceChannelParams()
    model = fsr_model_of(params)

    # unity resistance ratio pins the output at -V_REF
    assert abs(linearized_voltage(params.r_g, params) - (-3.3)) <= 1e-12

    # |V_OUT| strictly monotone decreasing in R_FS on a 1000-point grid
    previous = None
    for i in range(1000):
        r_fs = 100.0 + i * 1000.0  # strictly increasing resistance
        magnitude = abs(linearized_voltage(r_fs, params))
        if previous is not None:
            assert magnitude < previous
        previous = magnitude

    # force -> voltage -> force identity within 1e-9 N across [0, f_max]
    for i in range(1001):
        force = params.f_max * i / 1000.0
        volts = force_to_voltage(force, model, params)
        back = voltage_to_force(abs(volts) * 1000.0, model, params)
        assert abs(back - force) <= 1e-9

    _report("force-linearization", started, 1.0)


def test_sensitivity_scaling_law():
    """Follower delta equals leader delta divided by s, exactly; no jump on switch."""
    started = time.perf_counter()
    wide = JointLimits(lower=(-1e12,) * 6, upper=(1e12,) * 6, v_max=3.0)
    rng = random.Random(1201)
    zero = (0.0,) * 6
    for divisor in (1, 2, 4):
        state = ControlState.initial(leader_q=zero, follower_q=zero,
                                     mode=SensitivityMode(divisor))
        for _ in range(10_000):
            delta = tuple(rng.uniform(-3.0, 3.0) for _ in range(6))
            _, cmd = teleop_step(state, delta, 0.5, wide)
            for joint in range(6):
                assert cmd.q_target[joint] == delta[joint] / divisor

    # continuity: identical command immediately before and after each cycle
    narrow = JointLimits(lower=(-2.6,) * 6, upper=(2.6,) * 6, v_max=3.0)
    state = ControlState.initial(leader_q=zero, follower_q=zero)
    master = zero
    for step in range(300):
        master = tuple(rng.uniform(-2.0, 2.0) for _ in range(6))
        state, before = teleop_step(state, master, 0.5, narrow)
        if step % 3 == 2:
            state = cycle_sensitivity(state)
            _, after = teleop_step(state, master, 0.5, narrow)
            assert after.q_target == before.q_target
            assert after.gripper_target == before.gripper_target

    _report("sensitivity-law", started, 5.0)


def test_protocol_suite():
    """Round trip 1e5 chunked messages; reject every single-bit corruption of 1e4 frames."""
    started = time.perf_counter()
    assert crc16(b"123456789") == 0x29B1

    rng = random.Random(1301)
    originals = [random_message(rng) for _ in range(100_000)]
    stream = b"".join(encode_frame(m) for m in originals)
    parser = FrameParser()
    recovered = []
    i = 0
    while i < len(stream):
        step = rng.randrange(1, 256)
        messages, errors = parser.feed(stream[i : i + step])
        recovered.extend(messages)
        assert not errors
        i += step
    assert recovered == originals

    for _ in range(10_000):
        frame = encode_frame(random_message(rng))
        for byte_index in range(len(frame)):
            for bit in range(8):
                corrupted = bytearray(frame)
                corrupted[byte_index] ^= 1 << bit
                one_shot = FrameParser()
                messages, _ = one_shot.feed(bytes(corrupted))
                assert messages == []

    _report("protocol-suite", started, 30.0)


def test_kinematics_oracle():
    """FK equals the independent homogeneous-transform oracle on 1000 configs."""
    started = time.perf_counter()
    table = ur3_dh_table()
    rows = [(r.a, r.alpha, r.d, r.theta_offset) for r in table.rows]
    rng = random.Random(1401)
    for _ in range(1000):
        q = tuple(rng.uniform(-math.pi, math.pi) for _ in range(6))
        pose = forward_kinematics(q, table)
        oracle = fk_oracle_matrix(q, rows)
        for axis in range(3):
            assert abs(pose.position[axis] - oracle[axis, 3]) <= 1e-9
        expected = quat_wxyz_oracle(oracle)
        direct = max(abs(a - b) for a, b in zip(pose.orientation, expected))
        negated = max(abs(a + b) for a, b in zip(pose.orientation, expected))
        assert min(direct, negated) <= 1e-9

    _report("kinematics-oracle", started, 5.0)


def test_force_feedback_reduces_grip_force():
    """Feedback strictly lowers peak grip force on the egg across 20 seeds."""
    started = time.perf_counter()
    base = load_scenario_config("egg")
    breaks_without_feedback = 0
    for seed in range(1, 21):
        cfg = replace(base, seed=seed)
        with_ff = run_egg_scenario(cfg, ff_enabled=True, collect_trace=False)
        without_ff = run_egg_scenario(cfg, ff_enabled=False, collect_trace=False)
        assert with_ff.peak_force < without_ff.peak_force, f"seed {seed}"
        assert not with_ff.broken, f"seed {seed}: egg broke despite feedback"
        breaks_without_feedback += int(without_ff.broken)
    assert breaks_without_feedback >= 1

    _report("force-feedback-egg", started, 30.0)


def _record_session(tmp_path, name: str) -> str:
    dataset = str(tmp_path / name)
    config = SessionConfig(
        transport="sim:wave", dataset_dir=dataset, rate_hz=100, realtime=False
    )
    runner = SessionRunner(resolve_session(config))
    runner.record_for(10.0)
    return dataset


def test_dataset_integrity(tmp_path):
    """10 s at 100 Hz: 1000 rows, recomputable poses, exact save/load, exact replay."""
    started = time.perf_counter()
    dataset = _record_session(tmp_path, "session")
    episode_path = f"{dataset}/episode_1.csv"

    records = load_episode(episode_path)
    assert len(records) == 1000
    manifest = load_manifest(dataset)[0]
    assert manifest.samples == 1000

    for earlier, later in zip(records, records[1:]):
        assert later.t_us > earlier.t_us

    table = ur3_dh_table()
    for rec in records:
        pose = forward_kinematics(rec.measured_q, table)
        for a, b in zip(pose.position, rec.ee_pose.position):
            assert abs(a - b) <= 1e-9

    resaved = tmp_path / "resaved.csv"
    save_episode(resaved, load_episode(episode_path))
    import pathlib

    assert resaved.read_bytes() == pathlib.Path(episode_path).read_bytes()

    config_text = (pathlib.Path(dataset) / CONFIG_FILE_NAME).read_text()
    follower, dt = follower_from_config_values(parse_config_text(config_text))
    trajectory = replay(records, follower, dt)
    for rec, q in zip(records, trajectory):
        for a, b in zip(rec.measured_q, q):
            assert abs(a - b) <= 1e-9

    _report("dataset-integrity", started, 30.0)


def test_end_to_end_determinism(tmp_path):
    """Identical (seed, script, config) produce byte-identical episode files."""
    started = time.perf_counter()
    first = _record_session(tmp_path, "run_one")
    second = _record_session(tmp_path, "run_two")
    import pathlib

    bytes_one = pathlib.Path(first, "episode_1.csv").read_bytes()
    bytes_two = pathlib.Path(second, "episode_1.csv").read_bytes()
    assert bytes_one == bytes_two
    assert (
        pathlib.Path(first, CONFIG_FILE_NAME).read_bytes()
        == pathlib.Path(second, CONFIG_FILE_NAME).read_bytes()
    )

    _report("end-to-end-determinism", started, 60.0)
