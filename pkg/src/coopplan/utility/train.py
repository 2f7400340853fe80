"""Fit the value head to exploration costs under a squared-error loss."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import ExplorationSample, ExploratoryDataset
from .features import FeaturizerSpec, featurize_batch
from .model import UtilityModel
from .network import AdamW, forward, init_params, mse_loss_and_grad

log = logging.getLogger(__name__)


class NonFiniteLoss(FloatingPointError):
    """Training diverged; try a smaller learning rate."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    weight_decay: float = 0.1
    epochs: int = 20
    learning_rate: float = 1e-3
    seed: int = 0
    hidden: int = 32
    featurizer: FeaturizerSpec = field(default_factory=FeaturizerSpec)
    executed_only: bool = False

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.hidden < 1:
            raise ValueError("batch_size, epochs and hidden must be >= 1")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")


def _canonical(samples: Sequence[ExplorationSample]) -> list[ExplorationSample]:
    return sorted(samples, key=lambda s: s.key)


def train_on_samples(train: Sequence[ExplorationSample], config: TrainConfig,
                     holdout: Sequence[ExplorationSample] = ()) -> UtilityModel:
    if not train:
        raise ValueError("training split is empty")
    train = _canonical(train)
    rng = np.random.default_rng(config.seed)
    X = featurize_batch([(s.obs_text, s.action_text) for s in train], config.featurizer)
    y = np.array([s.cost for s in train], dtype=float)
    mu = float(y.mean())
    sigma = float(y.std()) or 1.0
    z = (y - mu) / sigma

    params = init_params(config.featurizer.dim, config.hidden, rng)
    opt = AdamW(lr=config.learning_rate, weight_decay=config.weight_decay)
    history = []
    n = len(train)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grad = mse_loss_and_grad(params, X[idx], z[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} in epoch {epoch + 1}")
            opt.step(params, grad)
        out, _ = forward(params, X)
        mse = float(np.mean((mu + sigma * out - y) ** 2))
        if not np.isfinite(mse) or not params.finite():
            raise NonFiniteLoss(f"non-finite parameters after epoch {epoch + 1}")
        history.append(mse)
        log.debug("epoch %d train mse %.4f", epoch + 1, mse)

    model = UtilityModel(config.featurizer, params, mu, sigma, {
        "epochs": config.epochs,
        "train_mse_per_epoch": history,
        "train_mse": history[-1],
        "n_train": n,
        "config": {k: v for k, v in config.__dict__.items() if k != "featurizer"},
    })
    if holdout:
        from .evaluate import mse_mae

        mse, _ = mse_mae(model, holdout)
        model.meta["holdout_mse"] = mse
    return model


def train_utility(dataset: ExploratoryDataset, config: TrainConfig = TrainConfig()) -> UtilityModel:
    train = dataset.split("train", executed_only=config.executed_only)
    holdout = dataset.split("holdout")
    return train_on_samples(train, config, holdout)
