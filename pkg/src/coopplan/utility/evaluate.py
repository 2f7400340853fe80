"""Holdout quality of a cost model."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from .dataset import ExplorationSample


class DegenerateHoldout(ValueError):
    """All holdout labels are equal, so rank correlation is undefined."""

    def __init__(self, mse: float, mae: float):
        super().__init__(f"holdout labels are constant (mse={mse:.4f}, mae={mae:.4f})")
        self.mse = mse
        self.mae = mae


@dataclass(frozen=True)
class UtilityEval:
    mse: float
    mae: float
    rank_correlation: float
    n_samples: int
    n_states: int
    label_variance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _predict(model, samples: Sequence[ExplorationSample]) -> np.ndarray:
    return np.asarray(model.predict_many([(s.obs_text, s.action_text) for s in samples]), dtype=float)


def mse_mae(model, samples: Sequence[ExplorationSample]) -> tuple[float, float]:
    y = np.array([s.cost for s in samples], dtype=float)
    r = _predict(model, samples) - y
    return float(np.mean(r * r)), float(np.mean(np.abs(r)))


def evaluate_utility(model, holdout: Sequence[ExplorationSample]) -> UtilityEval:
    """MSE, MAE and mean per-state Spearman correlation over the holdout.

    Candidates are grouped by decision point (`state_key`); states whose true
    costs are all equal carry no ranking information and are skipped. A state
    where the model predicts a constant counts as zero correlation.
    """
    if not holdout:
        raise ValueError("holdout split is empty")
    y = np.array([s.cost for s in holdout], dtype=float)
    pred = _predict(model, holdout)
    r = pred - y
    mse, mae = float(np.mean(r * r)), float(np.mean(np.abs(r)))
    if np.all(y == y[0]):
        raise DegenerateHoldout(mse, mae)

    groups: dict[str, list[int]] = defaultdict(list)
    for i, s in enumerate(holdout):
        groups[s.state_key or "all"].append(i)
    rhos = []
    for idx in groups.values():
        if len(idx) < 2 or np.all(y[idx] == y[idx[0]]):
            continue
        if np.all(pred[idx] == pred[idx[0]]):
            rhos.append(0.0)
            continue
        rho = spearmanr(pred[idx], y[idx]).statistic
        rhos.append(0.0 if np.isnan(rho) else float(rho))
    rho = float(np.mean(rhos)) if rhos else float("nan")
    return UtilityEval(mse, mae, rho, len(holdout), len(rhos), float(np.var(y)))
