"""Run (task, seed) grids and turn episode records into metrics."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from statistics import mean
from typing import Callable, Optional, Sequence

from ..agent.planner import ABLATIONS
from ..comm.messages import KnowledgeList
from ..llm.backends import Backend, CallRecord
from ..utility.model import UtilityModel, save_model
from ..world.state import Task
from ..world.tasks import suite as get_suite
from .config import ConfigError, RunConfig
from .episode import run_episode
from .records import EpisodeRecord

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpisodeSummary:
    task_id: str
    seed: int
    completed: bool
    steps_used: int
    delivered: int
    total: int
    backend_failures: int
    fallbacks: int
    messages: int
    knowledge_version: int

    @property
    def transport_rate(self) -> float:
        return 100.0 * self.delivered / self.total if self.total else 100.0


def summarize(record: EpisodeRecord) -> EpisodeSummary:
    f = record.footer
    return EpisodeSummary(record.task_id, record.seed, f["completed"], f["steps_used"], f["delivered"], f["total"],
                          f["backend_failures"], f["fallbacks"], f["messages"], f["knowledge_version"])


@dataclass(frozen=True)
class GroupMetrics:
    episodes: int
    completed: int
    incomplete: int
    average_steps: Optional[float]  # over completed episodes only
    transport_rate: float           # pooled delivered / total, in percent
    backend_failures: int
    fallbacks: int


def group_metrics(rows: Sequence[EpisodeSummary]) -> GroupMetrics:
    if not rows:
        raise ValueError("no episodes to aggregate")
    done = [r for r in rows if r.completed]
    delivered = sum(r.delivered for r in rows)
    total = sum(r.total for r in rows)
    return GroupMetrics(
        episodes=len(rows),
        completed=len(done),
        incomplete=len(rows) - len(done),
        average_steps=mean(r.steps_used for r in done) if done else None,
        transport_rate=100.0 * delivered / total if total else 100.0,
        backend_failures=sum(r.backend_failures for r in rows),
        fallbacks=sum(r.fallbacks for r in rows),
    )


@dataclass
class MetricsReport:
    episodes: list[EpisodeSummary]
    per_task: dict[str, GroupMetrics] = field(default_factory=dict)
    aggregate: Optional[GroupMetrics] = None
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "aggregate": asdict(self.aggregate) if self.aggregate else None,
            "per_task": {k: asdict(v) for k, v in self.per_task.items()},
            "episodes": [{**asdict(e), "transport_rate": e.transport_rate} for e in self.episodes],
        }


def aggregate(summaries: Sequence[EpisodeSummary], config_hash: str = "") -> MetricsReport:
    rows = sorted(summaries, key=lambda s: (s.task_id, s.seed))
    tasks: dict[str, list[EpisodeSummary]] = {}
    for r in rows:
        tasks.setdefault(r.task_id, []).append(r)
    return MetricsReport(rows, {t: group_metrics(v) for t, v in tasks.items()}, group_metrics(rows), config_hash)


def resolve_tasks(config: RunConfig) -> list[Task]:
    try:
        return get_suite(config.suite)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"unknown task suite {config.suite!r}") from exc


def record_path(out: Path, task_id: str, seed: int) -> Path:
    return out / "episodes" / f"{task_id}__seed{seed}.jsonl"


def run_benchmark(config: RunConfig, tasks: Optional[Sequence[Task]] = None, backend: Optional[Backend] = None,
                  utility=None, write: bool = True, workers: int = 1,
                  backend_factory: Optional[Callable[[], Backend]] = None) -> MetricsReport:
    """Every (task, seed) pair of the suite; writes records and the report under ``config.out``.

    A model object passed as `utility` is saved next to the records and
    referenced from the config, so each record can be replayed on its own.
    """
    tasks = list(tasks) if tasks is not None else resolve_tasks(config)
    out = Path(config.out)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    if isinstance(utility, UtilityModel) and config.flags.use_utility and write:
        path = out / "utility_model.json"
        save_model(utility, path)
        config = replace(config, utility=str(path))
        utility = None

    grid = [(t, s) for t in tasks for s in config.seeds]

    def one(item, knowledge=None):
        task, seed = item
        calls: list[CallRecord] = []
        b = backend_factory() if backend_factory else backend
        rec = run_episode(config, task, seed, backend=b, utility=utility, knowledge=knowledge,
                          calls_sink=calls.extend)
        if write:
            path = record_path(out, task.id, seed)
            rec.write(path)
            with path.with_suffix(".calls.jsonl").open("w") as f:
                for c in calls:
                    f.write(json.dumps(c.to_dict(with_latency=True), sort_keys=True) + "\n")
        return rec

    if config.comm.persist_knowledge or workers <= 1:
        records = []
        carried = None
        for item in grid:
            rec = one(item, carried)
            audit = rec.footer["knowledge_audit"][-1]
            carried = KnowledgeList(0, audit["text"], audit["editor"])
            records.append(rec)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, grid))

    report = aggregate([summarize(r) for r in records], config.hash())
    if write:
        from .report import write_report

        write_report(report, out)
    return report


@dataclass
class AblationReport:
    rows: list[tuple[str, MetricsReport]]

    def to_dict(self) -> dict:
        return {"rows": [{"name": n, **r.to_dict()} for n, r in self.rows]}

    def average_steps(self, name: str, completed_only: bool = True) -> Optional[float]:
        rep = dict(self.rows)[name]
        if completed_only:
            return rep.aggregate.average_steps
        return mean(e.steps_used for e in rep.episodes)


def run_ablation(config: RunConfig, tasks: Optional[Sequence[Task]] = None, utility=None,
                 backend: Optional[Backend] = None, write: bool = True, workers: int = 1) -> AblationReport:
    """Full method, then without utility, with prompted costs, without reflection, on one grid."""
    rows = []
    out = Path(config.out)
    for name, flags in ABLATIONS:
        cfg = replace(config, flags=flags, out=str(out / name))
        rows.append((name, run_benchmark(cfg, tasks, backend=backend, utility=utility if flags.use_utility else None,
                                         write=write, workers=workers)))
    report = AblationReport(rows)
    if write:
        from .report import write_ablation_report

        write_ablation_report(report, out)
    return report
