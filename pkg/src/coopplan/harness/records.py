"""Episode transcripts as line-delimited JSON: header, one line per macro-step, footer."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

RECORD_SCHEMA_VERSION = 1


class SchemaVersionMismatch(ValueError):
    pass


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(text: str, mode: str) -> str:
    if mode == "hash":
        return "sha256:" + hashlib.sha256(text.encode()).hexdigest()
    return text


@dataclass
class EpisodeRecord:
    header: dict
    events: list[dict] = field(default_factory=list)
    footer: dict = field(default_factory=dict)

    @property
    def task_id(self) -> str:
        return self.header["task_id"]

    @property
    def seed(self) -> int:
        return self.header["seed"]

    def lines(self) -> list[str]:
        out = [canonical({"type": "header", **self.header})]
        out.extend(canonical({"type": "step", **e}) for e in self.events)
        out.append(canonical({"type": "footer", **self.footer}))
        return out

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())

    def validate(self) -> None:
        ticks = [e["tick"] for e in self.events]
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise ValueError("events are not strictly tick-ordered")
        if self.footer.get("steps_used", 0) > self.header["horizon"]:
            raise ValueError("steps_used exceeds the horizon")


def loads_record(text: str) -> EpisodeRecord:
    rows = [json.loads(l) for l in text.splitlines() if l.strip()]
    if not rows or rows[0].get("type") != "header":
        raise ValueError("record has no header line")
    header = rows[0]
    if header.get("schema_version") != RECORD_SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"record schema {header.get('schema_version')!r}, this version reads {RECORD_SCHEMA_VERSION}")
    header = {k: v for k, v in header.items() if k != "type"}
    events = [{k: v for k, v in r.items() if k != "type"} for r in rows[1:] if r.get("type") == "step"]
    footers = [r for r in rows if r.get("type") == "footer"]
    footer = {k: v for k, v in footers[-1].items() if k != "type"} if footers else {}
    return EpisodeRecord(header, events, footer)


def read_record(path) -> EpisodeRecord:
    return loads_record(Path(path).read_text())
