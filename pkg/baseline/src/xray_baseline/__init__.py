"""CNN baselines (ResNet-18 / VGG-16) for two-class X-ray classification."""

from .config import (BACKBONES, MODES, BaselineConfig, DatasetError,
                     SetupError)
from .data import LayoutIndex, scan_layout, stratified_sample
from .trainer import (SeedResult, build_model, evaluate_rows,
                      read_prediction_csv, train_and_predict)

__version__ = "0.1.0"

__all__ = [
    "BACKBONES", "MODES", "BaselineConfig", "DatasetError", "LayoutIndex",
    "SeedResult", "SetupError", "build_model", "evaluate_rows",
    "read_prediction_csv", "scan_layout", "stratified_sample",
    "train_and_predict",
]
