"""Write metrics as JSON, CSV, a text table and PNG figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .benchmark import AblationReport, MetricsReport  # noqa: E402

EPISODE_COLUMNS = ("task_id", "seed", "completed", "steps_used", "delivered", "total", "transport_rate",
                   "backend_failures", "fallbacks", "messages", "knowledge_version")


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.1f}"
    return str(x)


def metrics_table(report: MetricsReport) -> str:
    head = f"{'task':<16} {'episodes':>8} {'done':>5} {'avg steps':>10} {'transport %':>12} {'failures':>9}"
    lines = [head, "-" * len(head)]
    groups = list(report.per_task.items()) + [("ALL", report.aggregate)]
    for name, g in groups:
        lines.append(f"{name:<16} {g.episodes:>8} {g.completed:>5} {_fmt(g.average_steps):>10} "
                     f"{_fmt(g.transport_rate):>12} {g.backend_failures:>9}")
    return "\n".join(lines)


def write_episode_csv(report: MetricsReport, path: Path) -> None:
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(EPISODE_COLUMNS)
        for e in report.episodes:
            w.writerow([e.transport_rate if c == "transport_rate" else getattr(e, c) for c in EPISODE_COLUMNS])


def write_report(report: MetricsReport, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json", out / "report.csv", out / "report.txt", out / "steps_per_task.png"]
    written[0].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    write_episode_csv(report, written[1])
    written[2].write_text(metrics_table(report) + "\n")

    names = list(report.per_task)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    steps = [report.per_task[n].average_steps or 0.0 for n in names]
    rates = [report.per_task[n].transport_rate for n in names]
    ax1.bar(names, steps, color="tab:blue")
    ax1.set_ylabel("average steps (completed episodes)")
    ax2.bar(names, rates, color="tab:green")
    ax2.set_ylabel("transport rate (%)")
    ax2.set_ylim(0, 100)
    for ax in (ax1, ax2):
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(written[3], dpi=100)
    plt.close(fig)
    return written


def ablation_table(report: AblationReport) -> str:
    head = f"{'variant':<16} {'episodes':>8} {'done':>5} {'avg steps':>10} {'mean steps (all)':>17} {'transport %':>12}"
    lines = [head, "-" * len(head)]
    for name, rep in report.rows:
        g = rep.aggregate
        lines.append(f"{name:<16} {g.episodes:>8} {g.completed:>5} {_fmt(g.average_steps):>10} "
                     f"{_fmt(report.average_steps(name, completed_only=False)):>17} {_fmt(g.transport_rate):>12}")
    return "\n".join(lines)


def write_ablation_report(report: AblationReport, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "ablation.json", out / "ablation.csv", out / "ablation.txt", out / "ablation_steps.png"]
    written[0].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    with written[1].open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("variant", "task_id", "episodes", "completed", "average_steps", "transport_rate"))
        for name, rep in report.rows:
            for task, g in list(rep.per_task.items()) + [("ALL", rep.aggregate)]:
                w.writerow((name, task, g.episodes, g.completed, g.average_steps, g.transport_rate))
    written[2].write_text(ablation_table(report) + "\n")

    names = [n for n, _ in report.rows]
    tasks = list(report.rows[0][1].per_task)
    fig, ax = plt.subplots(figsize=(8, 4))
    width = 0.8 / len(names)
    for k, (name, rep) in enumerate(report.rows):
        xs = [i + k * width for i in range(len(tasks))]
        ax.bar(xs, [rep.per_task[t].average_steps or 0.0 for t in tasks], width, label=name)
    ax.set_xticks([i + width * (len(names) - 1) / 2 for i in range(len(tasks))])
    ax.set_xticklabels(tasks)
    ax.set_ylabel("average steps (completed episodes)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(written[3], dpi=100)
    plt.close(fig)
    return written
