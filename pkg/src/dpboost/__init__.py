"""Differentially private smooth boosting over 1-rules and TopDown trees."""

from .boosting import BoostConfig, ConfigError, Ensemble, accuracy, lazybb, margins
from .data import BooleanDataset, DataError, load_dataset, load_schema, one_hot_encode
from .rng import RngStream

__all__ = [
    "BooleanDataset",
    "BoostConfig",
    "ConfigError",
    "DataError",
    "Ensemble",
    "RngStream",
    "accuracy",
    "lazybb",
    "load_dataset",
    "load_schema",
    "margins",
    "one_hot_encode",
]

__version__ = "0.1.0"
