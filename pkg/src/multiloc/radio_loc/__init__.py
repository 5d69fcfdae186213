"""Massive-MIMO fingerprint positioning with two fused fully connected networks."""

from .dataset import RadioRun, circle_run, grid_campaign, read_run, simulate_run, write_run
from .features import (
    FeatureSet,
    FeatureVector,
    cir_features,
    covariance_features,
    extract_features,
    spatial_covariance,
    vectorize_covariance,
)
from .mlp import MlpArch, MlpModel, TrainConfig, TrainResult, load_model, save_model, train_fcnn
from .pipeline import CAMPAIGN_CONFIG, RadioConfig, RadioModels, fit_radio, localize_radio, predict_fused, run_features
from .split import DatasetSplit, build_split

__all__ = [
    "CAMPAIGN_CONFIG",
    "DatasetSplit",
    "FeatureSet",
    "FeatureVector",
    "MlpArch",
    "MlpModel",
    "RadioConfig",
    "RadioModels",
    "RadioRun",
    "TrainConfig",
    "TrainResult",
    "build_split",
    "cir_features",
    "circle_run",
    "covariance_features",
    "extract_features",
    "fit_radio",
    "grid_campaign",
    "load_model",
    "localize_radio",
    "predict_fused",
    "read_run",
    "run_features",
    "save_model",
    "simulate_run",
    "spatial_covariance",
    "train_fcnn",
    "vectorize_covariance",
    "write_run",
]
