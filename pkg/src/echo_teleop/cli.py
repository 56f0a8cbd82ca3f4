"""Command-line entry point.

Subcommands: calibrate, teleop, simulate, record, replay, dataset.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from pathlib import Path

from .calibrate import run_calibration
from .control import FeedbackGains
from .errors import EchoError
from .recorder import episode_stats, load_episode, load_manifest, replay
from .sensing import save_calibration
from .session import (
    CONFIG_FILE_NAME,
    DATASET_ENV_VAR,
    DEFAULT_HTTP_PORT,
    DEFAULT_TCP_PORT,
    SessionConfig,
    SessionRunner,
    config_hash_of,
    follower_from_config_values,
    parse_config_text,
    resolve_session,
)
from .sim import load_scenario_config, run_egg_scenario
from .transport import LoopbackTransport, open_transport

REPLAY_TOLERANCE_RAD = 1e-9


def _default_dataset_dir() -> str:
    return os.environ.get(DATASET_ENV_VAR, "dataset")


def _add_session_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--transport", default="sim:wave", help="sim:<scenario> or serial:<dev>[:baud]")
    parser.add_argument("--calibration", default=None, help="calibration file (defaults built in)")
    parser.add_argument("--dataset", default=None, help=f"dataset directory (or ${DATASET_ENV_VAR})")
    parser.add_argument("--rate", type=int, default=100, help="control loop rate in Hz")
    parser.add_argument("--baud", type=int, default=115200)
    parser.add_argument("--mode", type=int, default=1, choices=(1, 2, 4), help="initial sensitivity divisor")
    parser.add_argument("--ff", choices=("on", "off"), default="on", help="force feedback initially enabled")


def _session_config(args, realtime: bool) -> SessionConfig:
    return SessionConfig(
        transport=args.transport,
        calibration_path=args.calibration,
        dataset_dir=args.dataset or _default_dataset_dir(),
        rate_hz=args.rate,
        gains=FeedbackGains(),
        initial_mode=args.mode,
        ff_enabled=args.ff == "on",
        baud=args.baud,
        realtime=realtime,
        duration_s=getattr(args, "duration", None),
        port=getattr(args, "port", DEFAULT_TCP_PORT),
        http_port=getattr(args, "http_port", DEFAULT_HTTP_PORT),
        ui_dir=getattr(args, "ui_dir", None),
    )


def cmd_calibrate(args) -> int:
    transport = open_transport(args.transport, baud=args.baud)
    tick = None
    if isinstance(transport, LoopbackTransport):
        counter = itertools.count()
        dt_us = transport.world.cfg.dt_us

        def tick():
            transport.world.emit(next(counter) * dt_us)

    def prompt(text: str) -> None:
        print(f"{text}, then press Enter...", flush=True)
        input()

    calibration, force_params = run_calibration(
        transport, prompt=prompt, notify=print, samples=args.samples, tick=tick
    )
    save_calibration(args.out, calibration, force_params)
    print(f"calibration written to {args.out}")
    transport.close()
    return 0


def cmd_teleop(args) -> int:
    from .service import serve

    config = _session_config(args, realtime=True)
    serve(config)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_scenario_config(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    arms = [("ff_on", True), ("ff_off", False)] if args.compare else [
        (f"ff_{args.ff}", args.ff == "on")
    ]
    reports = []
    for label, enabled in arms:
        report = run_egg_scenario(cfg, ff_enabled=enabled)
        reports.append((label, report))
        print(
            f"scenario={args.scenario} ff={'on' if enabled else 'off'} "
            f"seed={cfg.seed} {report.summary()}"
        )
    if args.compare:
        on = dict(reports)["ff_on"].peak_force
        off = dict(reports)["ff_off"].peak_force
        print(f"comparison: ff_on_peak_n={on:.6f} ff_off_peak_n={off:.6f} reduction_n={off - on:.6f}")
    if args.out:
        from .reports import render_scenario_reports

        written = render_scenario_reports(args.out, reports, f_break=cfg.f_break)
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_record(args) -> int:
    config = _session_config(args, realtime=False)
    runner = SessionRunner(resolve_session(config))
    runner.record_for(args.duration)
    manifests = load_manifest(config.dataset_dir)
    last = manifests[-1]
    print(
        f"recorded episode {last.episode_id}: {last.samples} samples, "
        f"{last.duration_us / 1e6:.3f} s, dataset {config.dataset_dir}"
    )
    return 0


def cmd_replay(args) -> int:
    episode_file = Path(args.episode)
    records = load_episode(episode_file)
    directory = episode_file.parent
    config_path = directory / CONFIG_FILE_NAME
    if not config_path.is_file():
        raise EchoError(f"missing {CONFIG_FILE_NAME} next to {episode_file.name}")
    config_text = config_path.read_text(encoding="utf-8")
    sim_hash = config_hash_of(config_text)
    episode_hash = None
    stem = episode_file.stem  # episode_<id>
    episode_id = int(stem.split("_")[1]) if "_" in stem else None
    for entry in load_manifest(directory):
        if entry.episode_id == episode_id:
            episode_hash = entry.config_hash
            break
    follower, dt = follower_from_config_values(parse_config_text(config_text))
    trajectory = replay(
        records,
        follower,
        dt,
        sim_config_hash=sim_hash,
        episode_config_hash=episode_hash,
    )
    worst = 0.0
    for rec, q in zip(records, trajectory):
        for a, b in zip(rec.measured_q, q):
            worst = max(worst, abs(a - b))
    ok = worst <= REPLAY_TOLERANCE_RAD
    print(
        f"replayed {len(records)} samples, max joint deviation {worst:.3e} rad "
        f"({'ok' if ok else 'MISMATCH'})"
    )
    return 0 if ok else 1


def cmd_dataset_inspect(args) -> int:
    directory = Path(args.directory)
    manifests = load_manifest(directory)
    if not manifests:
        print("0 episodes")
        return 0
    print(f"{len(manifests)} episodes")
    stats_by_id = {}
    records_by_id = {}
    for entry in manifests:
        path = directory / f"episode_{entry.episode_id}.csv"
        stats = {}
        if path.is_file():
            try:
                records = load_episode(path)
                records_by_id[entry.episode_id] = records
                stats = episode_stats(records)
            except EchoError as exc:
                stats = {"error": str(exc)}
        stats_by_id[entry.episode_id] = stats
        line = (
            f"episode {entry.episode_id}: {entry.status}, {entry.samples} samples, "
            f"{entry.duration_us / 1e6:.3f} s"
        )
        if "mean_force_n" in stats:
            line += (
                f", mean force {stats['mean_force_n']:.3f} N,"
                f" peak {stats['peak_force_n']:.3f} N"
            )
        if entry.dropped:
            line += f", dropped {entry.dropped}"
        if "error" in stats:
            line += f" [unreadable: {stats['error']}]"
        print(line)
    if args.out:
        from .reports import render_episode_reports, write_inspect_summary

        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = out_dir / "summary.csv"
        write_inspect_summary(summary, manifests, stats_by_id)
        print(f"wrote {summary}")
        for episode_id, records in records_by_id.items():
            for path in render_episode_reports(out_dir, episode_id, records):
                print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echo-teleop",
        description="Host stack for the Echo joint-matching teleoperation device.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="guided capture of per-joint endpoints")
    p.add_argument("--transport", default="sim:wave")
    p.add_argument("--baud", type=int, default=115200)
    p.add_argument("--out", required=True, help="calibration file to write")
    p.add_argument("--samples", type=int, default=50, help="frames averaged per posture")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("teleop", help="run the daemon")
    _add_session_flags(p)
    p.add_argument("--port", type=int, default=DEFAULT_TCP_PORT, help="telemetry/command TCP port")
    p.add_argument("--http-port", dest="http_port", type=int, default=DEFAULT_HTTP_PORT)
    p.add_argument("--ui-dir", dest="ui_dir", default=None, help="serve dashboard files from here")
    p.add_argument("--duration", type=float, default=None, help="stop after this many seconds")
    p.set_defaults(func=cmd_teleop)

    p = sub.add_parser("simulate", help="run a headless scenario and print its report")
    p.add_argument("--scenario", default="egg", help="bundled name or config path")
    p.add_argument("--ff", choices=("on", "off"), default="on")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--compare", action="store_true", help="run both feedback arms")
    p.add_argument("--out", default=None, help="write trace CSVs and figures here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("record", help="record a scripted sim session (lockstep)")
    _add_session_flags(p)
    p.add_argument("--duration", type=float, required=True, help="seconds to record")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("replay", help="re-run an episode through the follower model")
    p.add_argument("episode", help="path to episode_<id>.csv")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("dataset", help="dataset utilities")
    dataset_sub = p.add_subparsers(dest="dataset_command", required=True)
    p_inspect = dataset_sub.add_parser("inspect", help="manifest summary and statistics")
    p_inspect.add_argument("directory")
    p_inspect.add_argument("--out", default=None, help="write summary.csv and figures here")
    p_inspect.set_defaults(func=cmd_dataset_inspect)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EchoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
