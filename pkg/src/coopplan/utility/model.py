"""Cost models: the trained value head and a ground-truth lookup table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .features import FeaturizerSpec, featurize_batch
from .network import Params, forward

MODEL_FORMAT_VERSION = 1
MIN_COST = 1.0


@dataclass
class UtilityModel:
    featurizer: FeaturizerSpec
    params: Params
    target_mean: float = 0.0
    target_std: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params.check_shapes()
        if self.params.W1.shape[0] != self.featurizer.dim:
            raise ValueError("first layer does not match the feature dimension")

    def raw(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        out, _ = forward(self.params, featurize_batch(pairs, self.featurizer))
        return self.target_mean + self.target_std * out

    def predict_many(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        return np.maximum(self.raw(pairs), MIN_COST)

    def predict(self, obs_text: str, action_text: str) -> float:
        return float(self.predict_many([(obs_text, action_text)])[0])

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "featurizer": self.featurizer.to_dict(),
            "params": self.params.to_dict(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UtilityModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        return cls(FeaturizerSpec.from_dict(d["featurizer"]), Params.from_dict(d["params"]),
                   float(d["target_mean"]), float(d["target_std"]), dict(d.get("meta", {})))


def save_model(model: UtilityModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True))


def load_model(path) -> UtilityModel:
    return UtilityModel.from_dict(json.loads(Path(path).read_text()))


class OracleUtility:
    """Returns the true cost for (observation, action) pairs it was built from."""

    def __init__(self, table: dict[tuple[str, str], float], default: Optional[float] = None):
        self.table = dict(table)
        self.default = default

    @classmethod
    def from_samples(cls, samples: Iterable) -> "OracleUtility":
        return cls({(s.obs_text, s.action_text): float(s.cost) for s in samples})

    @classmethod
    def from_state(cls, state, agent: int, obs=None) -> "OracleUtility":
        from ..world import available_actions, observe, render_action_text, render_observation_text, true_cost

        obs = obs if obs is not None else observe(state, agent)
        lo = render_observation_text(obs)
        names = state.task.names()
        return cls({(lo, render_action_text(a, names)): float(true_cost(state, agent, a))
                    for a in available_actions(state, agent)})

    def predict(self, obs_text: str, action_text: str) -> float:
        try:
            return max(self.table[(obs_text, action_text)], MIN_COST)
        except KeyError:
            if self.default is None:
                raise
            return self.default

    def predict_many(self, pairs) -> np.ndarray:
        return np.array([self.predict(o, a) for o, a in pairs])


def predict_cost(model, obs_text: str, action_text: str) -> float:
    """Estimated ticks to execute the action from the observation; never below 1."""
    return model.predict(obs_text, action_text)
