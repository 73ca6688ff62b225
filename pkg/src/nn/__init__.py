"""
Network topology, activations, golden references, calibration and training.
"""

from .topology import (
    ACTIVATIONS,
    DimensionError,
    LayerFormats,
    NetworkError,
    NetworkTopology,
)
from .activations import logsig, satlin
from .datasets import Dataset, DatasetError, DatasetSpec, load_dataset
from .trainer import FloatNetwork, NetworkTrainer, TrainingDivergedError
from .archive import ArchiveError, WeightArchive, build_archive, load_archive, save_archive
from .reference import classify_reference, predict_reference, reference_error
from .calibrate import CalibrationError, calibrate, check_no_wrap

__all__ = [
    "ACTIVATIONS",
    "ArchiveError",
    "CalibrationError",
    "Dataset",
    "DatasetError",
    "DatasetSpec",
    "DimensionError",
    "FloatNetwork",
    "LayerFormats",
    "NetworkError",
    "NetworkTopology",
    "NetworkTrainer",
    "TrainingDivergedError",
    "WeightArchive",
    "build_archive",
    "calibrate",
    "check_no_wrap",
    "classify_reference",
    "load_archive",
    "load_dataset",
    "logsig",
    "predict_reference",
    "reference_error",
    "satlin",
    "save_archive",
]
