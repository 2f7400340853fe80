"""Learned per-agent cost estimates for candidate actions."""

from .dataset import (
    EmptyDataset,
    ExplorationSample,
    ExploratoryDataset,
    collect_exploratory_dataset,
    load_dataset,
    save_dataset,
    split_episodes,
)
from .evaluate import DegenerateHoldout, UtilityEval, evaluate_utility
from .features import FeaturizerSpec, featurize, featurize_batch
from .model import OracleUtility, UtilityModel, load_model, predict_cost, save_model
from .network import AdamW, Params, forward, init_params, mse_loss_and_grad
from .train import NonFiniteLoss, TrainConfig, train_on_samples, train_utility
