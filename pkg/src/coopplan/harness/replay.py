"""Re-run an episode from its own header and compare against the stored record."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..llm.backends import ReplayBackend
from ..world.tasks import task_from_dict
from .config import config_from_dict
from .episode import run_episode
from .records import EpisodeRecord, canonical

WORLD_FIELDS = ("tick", "actions", "failures", "messages")


@dataclass(frozen=True)
class Verdict:
    passed: bool
    first_divergent_tick: Optional[int] = None
    detail: str = ""

    def __str__(self) -> str:
        if self.passed:
            return "pass"
        where = f"tick {self.first_divergent_tick}" if self.first_divergent_tick is not None else "record"
        return f"fail at {where}: {self.detail}"


def _first_step_difference(original: EpisodeRecord, regenerated: EpisodeRecord, fields=None) -> Optional[Verdict]:
    for k, (a, b) in enumerate(zip(original.events, regenerated.events)):
        if fields is not None:
            a = {f: a.get(f) for f in fields}
            b = {f: b.get(f) for f in fields}
        if canonical(a) != canonical(b):
            changed = sorted(f for f in set(a) | set(b) if a.get(f) != b.get(f))
            return Verdict(False, original.events[k]["tick"], "differs in " + ", ".join(changed))
    if len(original.events) != len(regenerated.events):
        k = min(len(original.events), len(regenerated.events))
        tick = original.events[k]["tick"] if k < len(original.events) else None
        return Verdict(False, tick, f"{len(original.events)} recorded steps, {len(regenerated.events)} replayed")
    return None


def replay(record: EpisodeRecord, utility=None) -> Verdict:
    """Scripted records must regenerate byte for byte. HTTP records are re-run
    on their logged replies and must agree on every world event."""
    config = config_from_dict(record.header["config"])
    task = task_from_dict(record.header["task"])
    seed = record.header["seed"]
    if config.backend.kind == "scripted":
        new = run_episode(config, task, seed, utility=utility)
        if record.dumps() == new.dumps():
            return Verdict(True)
        if canonical(record.header) != canonical(new.header):
            return Verdict(False, None, "header differs")
        diff = _first_step_difference(record, new)
        if diff is not None:
            return diff
        return Verdict(False, None, "footer differs")

    replies = [r for e in record.events for r in e.get("replies", [])]
    new = run_episode(config, task, seed, backend=ReplayBackend(replies), utility=utility)
    diff = _first_step_difference(record, new, WORLD_FIELDS)
    if diff is not None:
        return diff
    if canonical(record.footer.get("final_state")) != canonical(new.footer.get("final_state")):
        return Verdict(False, None, "final world state differs")
    return Verdict(True)
