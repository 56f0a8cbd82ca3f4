"""Report rendering: delimited traces plus matplotlib figures saved to files.

Every report path writes the numbers first (CSV) and the picture second, so
results stay inspectable without a plotting stack.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .recorder import episode_stats

TRACE_COLUMNS = ("t_s", "force_n", "duty_permille", "opening", "gripper_target")


def write_scenario_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace)


def scenario_figure(path, labeled_reports, f_break: float = None) -> None:
    """Grip-force-versus-time traces, one line per run."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, report in labeled_reports:
        times = [row[0] for row in report.trace]
        forces = [row[1] for row in report.trace]
        ax.plot(times, forces, label=f"{label} (peak {report.peak_force:.2f} N)")
    if f_break is not None and f_break != float("inf"):
        ax.axhline(f_break, color="crimson", linestyle="--", linewidth=1, label="break threshold")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("grip force [N]")
    ax.set_title("Gripper compression force")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_inspect_summary(path, manifests, stats_by_id) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["episode", "status", "samples", "duration_s", "mean_force_n", "peak_force_n", "dropped"]
        )
        for manifest in manifests:
            stats = stats_by_id.get(manifest.episode_id, {})
            writer.writerow(
                [
                    manifest.episode_id,
                    manifest.status,
                    manifest.samples,
                    f"{manifest.duration_us / 1e6:.6f}",
                    f"{stats.get('mean_force_n', 0.0):.6f}",
                    f"{stats.get('peak_force_n', 0.0):.6f}",
                    manifest.dropped,
                ]
            )


def episode_figure(path, records, episode_id: int) -> None:
    """Joint trajectories and grip force for one episode."""
    fig, (ax_q, ax_f) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    times = [rec.t_us / 1e6 for rec in records]
    for joint in range(6):
        ax_q.plot(times, [rec.measured_q[joint] for rec in records], label=f"q{joint}")
    ax_q.set_ylabel("measured joints [rad]")
    ax_q.legend(loc="upper right", ncol=3, fontsize=8)
    ax_q.grid(True, alpha=0.3)
    ax_f.plot(times, [rec.grip_force for rec in records], color="tab:orange")
    ax_f.set_xlabel("time [s]")
    ax_f.set_ylabel("grip force [N]")
    ax_f.grid(True, alpha=0.3)
    fig.suptitle(f"episode {episode_id}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_episode_reports(out_dir, episode_id, records) -> list:
    """Figure + stats for one episode; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    figure_path = out_dir / f"episode_{episode_id}.png"
    episode_figure(figure_path, records, episode_id)
    return [figure_path]


def render_scenario_reports(out_dir, labeled_reports, f_break=None) -> list:
    """Trace CSVs plus the force figure; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, report in labeled_reports:
        trace_path = out_dir / f"trace_{label}.csv"
        write_scenario_trace(trace_path, report.trace)
        written.append(trace_path)
    figure_path = out_dir / "grip_force.png"
    scenario_figure(figure_path, labeled_reports, f_break)
    written.append(figure_path)
    return written


__all__ = [
    "episode_figure",
    "episode_stats",
    "render_episode_reports",
    "render_scenario_reports",
    "scenario_figure",
    "write_inspect_summary",
    "write_scenario_trace",
]
