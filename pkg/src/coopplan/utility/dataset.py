"""Exploration data: (observation text, action text, tick cost) triples."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..world import available_actions, render_action_text, render_observation_text, reset, step, true_cost
from ..world.state import Task


class EmptyDataset(ValueError):
    """Exploration produced no executed actions."""


@dataclass(frozen=True)
class ExplorationSample:
    obs_text: str
    action_text: str
    cost: int
    episode_id: int
    step: int = 0
    executed: bool = True
    state_key: Optional[str] = None  # groups the candidates of one decision point

    def __post_init__(self):
        if self.cost < 1:
            raise ValueError("cost must be >= 1")
        if not self.obs_text or not self.action_text:
            raise ValueError("texts must be nonempty")

    @property
    def key(self) -> tuple:
        return (self.episode_id, self.step, self.state_key or "", self.action_text, self.obs_text, self.cost)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExploratoryDataset:
    samples: list[ExplorationSample]
    train_episodes: tuple[int, ...]
    holdout_episodes: tuple[int, ...]

    def __post_init__(self):
        if set(self.train_episodes) & set(self.holdout_episodes):
            raise ValueError("an episode cannot be in both splits")

    @property
    def episode_ids(self) -> list[int]:
        return sorted({s.episode_id for s in self.samples})

    def split(self, name: str, executed_only: bool = False) -> list[ExplorationSample]:
        eps = set(self.train_episodes if name == "train" else self.holdout_episodes)
        return [s for s in self.samples if s.episode_id in eps and (s.executed or not executed_only)]

    @property
    def train(self) -> list[ExplorationSample]:
        return self.split("train")

    @property
    def holdout(self) -> list[ExplorationSample]:
        return self.split("holdout")


def split_episodes(episode_ids: Iterable[int], seed: int, train_fraction: float = 0.8):
    """Shuffle episodes with `seed` and put ceil(fraction * n) of them in train."""
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    eps = sorted(set(episode_ids))
    random.Random(seed).shuffle(eps)
    n_train = math.ceil(train_fraction * len(eps))
    return tuple(sorted(eps[:n_train])), tuple(sorted(eps[n_train:]))


def explore_episode(task: Task, seed: int, episode_id: int, max_steps: Optional[int] = None):
    """One uniform-random episode; yields every candidate of every decision point.

    Each agent picks uniformly among its available actions. All candidates
    are labelled with their true cost in the pre-step state so per-state
    rankings can be scored; the executed one is flagged.
    """
    rng = random.Random(f"explore:{seed}:{episode_id}")
    state, obs = reset(task, seed)
    names = task.names()
    n = 0
    done = False
    while not done and (max_steps is None or n < max_steps):
        joint = []
        for i in range(task.n_agents):
            cands = available_actions(state, i)
            choice = rng.randrange(len(cands))
            obs_text = render_observation_text(obs[i])
            key = f"{episode_id}:{n}:{i}"
            for j, a in enumerate(cands):
                yield ExplorationSample(obs_text, render_action_text(a, names), true_cost(state, i, a),
                                        episode_id, n, j == choice, key)
            joint.append(cands[choice])
        state, obs, _, done, _ = step(state, joint)
        n += 1


def collect_exploratory_dataset(tasks: Sequence[Task], episodes_per_task: int, seed: int,
                                train_fraction: float = 0.8, max_steps: Optional[int] = None) -> ExploratoryDataset:
    if episodes_per_task < 1:
        raise ValueError("episodes_per_task must be >= 1")
    samples: list[ExplorationSample] = []
    episode = 0
    for task in tasks:
        for k in range(episodes_per_task):
            samples.extend(explore_episode(task, seed * 1000 + episode, episode, max_steps))
            episode += 1
    if not any(s.executed for s in samples):
        raise EmptyDataset("exploration executed no actions")
    train, holdout = split_episodes(range(episode), seed, train_fraction)
    return ExploratoryDataset(samples, train, holdout)


DATASET_SCHEMA_VERSION = 1


def save_dataset(dataset: ExploratoryDataset, path) -> None:
    path = Path(path)
    with path.open("w") as f:
        header = {"schema_version": DATASET_SCHEMA_VERSION, "train_episodes": list(dataset.train_episodes),
                  "holdout_episodes": list(dataset.holdout_episodes)}
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for s in dataset.samples:
            f.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")


def load_dataset(path) -> ExploratoryDataset:
    with Path(path).open() as f:
        lines = [l for l in f if l.strip()]
    if not lines:
        raise EmptyDataset(f"{path} is empty")
    header = json.loads(lines[0])
    if "schema_version" not in header:
        raise ValueError(f"{path}: missing dataset header")
    if header["schema_version"] != DATASET_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported dataset schema {header['schema_version']}")
    samples = [ExplorationSample(**json.loads(l)) for l in lines[1:]]
    return ExploratoryDataset(samples, tuple(header["train_episodes"]), tuple(header["holdout_episodes"]))
