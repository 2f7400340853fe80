"""Run configuration: one YAML file, overridable from the command line.

Example::

    schema_version: 1
    suite: household
    n_agents: 2
    seeds: [0, 1, 2, 3, 4]
    backend: {kind: scripted, ruleset: default}
    flags: {use_utility: true, prompted_cost_estimation: false, use_reflection: true}
    utility: models/utility.json      # or "oracle"
    comm: {heartbeat: null, reflect_first: 5, persist_knowledge: false}
    digest: full                      # or "hash"
    out: runs/default
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from ..agent.planner import AblationFlags
from ..comm.protocol import DEFAULT_REFLECT_FIRST
from ..llm.backends import BackendSpec

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CommSettings:
    heartbeat: Optional[int] = None
    reflect_first: int = DEFAULT_REFLECT_FIRST
    persist_knowledge: bool = False

    def __post_init__(self):
        if self.heartbeat is not None and self.heartbeat < 1:
            raise ConfigError("comm.heartbeat must be >= 1 when set")
        if self.reflect_first < 0:
            raise ConfigError("comm.reflect_first must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    suite: str = "household"
    n_agents: int = 2
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    backend: BackendSpec = field(default_factory=BackendSpec)
    flags: AblationFlags = field(default_factory=AblationFlags)
    utility: Optional[str] = None
    comm: CommSettings = field(default_factory=CommSettings)
    digest: str = "full"
    out: str = "runs/default"

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigError("n_agents must be >= 2")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.digest not in ("full", "hash"):
            raise ConfigError("digest must be 'full' or 'hash'")

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "suite": self.suite,
            "n_agents": self.n_agents,
            "seeds": list(self.seeds),
            "backend": self.backend.to_dict(),
            "flags": self.flags.to_dict(),
            "utility": self.utility,
            "comm": dict(self.comm.__dict__),
            "digest": self.digest,
            "out": self.out,
        }

    def hash(self) -> str:
        """Digest of everything that shapes an episode (not where it is written)."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def config_from_dict(d: dict) -> RunConfig:
    d = dict(d)
    version = d.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version}")
    known = {"suite", "n_agents", "seeds", "backend", "flags", "utility", "comm", "digest", "out"}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        if "seeds" in d:
            d["seeds"] = tuple(int(s) for s in d["seeds"])
        if "backend" in d:
            d["backend"] = BackendSpec(**d["backend"])
        if "flags" in d:
            d["flags"] = AblationFlags(**d["flags"])
        if "comm" in d:
            d["comm"] = CommSettings(**d["comm"])
        return RunConfig(**d)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(data)


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))
