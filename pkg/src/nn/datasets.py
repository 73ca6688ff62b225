"""
Labeled input datasets: IDX, CSV and the desk-scale scikit-learn sets.
"""

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import polars as pl
from sklearn.datasets import load_digits, load_iris, load_wine, make_blobs
from sklearn.model_selection import train_test_split

from .topology import NetworkError

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

SOURCES = ("digits", "blobs", "iris", "wine", "idx", "csv")

# keeps min-max scaled features strictly below 1.0
_HEADROOM = 1.0 - 1.0 / 1024


class DatasetError(NetworkError):
    """Raised when a dataset cannot be read or violates its invariants."""
    pass


@dataclass
class Dataset:
    """Inputs in [0, 1) (one row per item) with integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str = "dataset"

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise DatasetError(f"inputs must be 2-D, got shape {self.inputs.shape}")
        if len(self.inputs) != len(self.labels):
            raise DatasetError(
                f"{len(self.inputs)} inputs but {len(self.labels)} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DatasetError(f"labels must lie in [0, {self.class_count})")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_count(self) -> int:
        return self.inputs.shape[1]

    def head(self, n: Optional[int]) -> "Dataset":
        if n is None or n >= len(self):
            return self
        return Dataset(self.inputs[:n], self.labels[:n], self.class_count, self.name)


@dataclass(frozen=True)
class DatasetSpec:
    """Where a dataset comes from and how it is split."""

    source: str = "digits"
    path: Optional[str] = None
    labels_path: Optional[str] = None
    divisor: float = 255.0
    has_header: bool = False
    test_fraction: float = 0.25
    limit: Optional[int] = None
    samples: int = 600
    centers: int = 2
    cluster_std: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DatasetError(f"unknown dataset source {self.source!r}; expected one of {SOURCES}")
        if not 0.0 <= self.test_fraction < 1.0:
            raise DatasetError(f"test_fraction must be in [0, 1), got {self.test_fraction}")


def _open_maybe_gzip(path: Path):
    with open(path, "rb") as f:
        gzipped = f.read(2) == b"\x1f\x8b"
    return gzip.open(path, "rb") if gzipped else open(path, "rb")


def load_idx(images_path, labels_path, name: str = "idx") -> Dataset:
    """
    Read an IDX image/label pair (MNIST layout, optionally gzip-compressed).

    Pixels are mapped into [0, 1) by dividing by 256.

    Args:
        images_path: IDX3 file, magic 0x00000803
        labels_path: IDX1 file, magic 0x00000801

    Returns:
        Dataset with one flattened row per image
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    for p in (images_path, labels_path):
        if not p.exists():
            raise DatasetError(f"File not found: {p}")

    with _open_maybe_gzip(images_path) as f:
        magic, count, rows, cols = struct.unpack(">IIII", f.read(16))
        if magic != IDX_IMAGES_MAGIC:
            raise DatasetError(f"{images_path}: bad image magic 0x{magic:08x}")
        pixels = np.frombuffer(f.read(count * rows * cols), dtype=np.uint8)

    with _open_maybe_gzip(labels_path) as f:
        magic, label_count = struct.unpack(">II", f.read(8))
        if magic != IDX_LABELS_MAGIC:
            raise DatasetError(f"{labels_path}: bad label magic 0x{magic:08x}")
        labels = np.frombuffer(f.read(label_count), dtype=np.uint8)

    if label_count != count or pixels.size != count * rows * cols:
        raise DatasetError(f"{images_path}: truncated or mismatched IDX pair")

    inputs = pixels.reshape(count, rows * cols).astype(np.float64) / 256.0
    logger.info(f"Loaded {count} IDX items ({rows}x{cols}) from {images_path}")
    return Dataset(inputs, labels.astype(np.int64), int(labels.max()) + 1, name)


def load_csv(path, divisor: float, has_header: bool = False, name: str = "csv") -> Dataset:
    """Label in the first column, raw features after it, scaled by ``divisor``."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"File not found: {path}")
    df = pl.read_csv(path, has_header=has_header)
    if df.width < 2:
        raise DatasetError(f"{path}: need a label column and at least one feature")

    labels = df.get_column(df.columns[0]).cast(pl.Int64).to_numpy()
    features = df.select(df.columns[1:]).cast(pl.Float64).to_numpy() / divisor
    if features.min() < 0.0 or features.max() >= 1.0:
        logger.warning(f"{path}: features outside [0, 1) after /{divisor}; clipping")
        features = np.clip(features, 0.0, np.nextafter(1.0, 0.0))
    logger.info(f"Loaded {len(labels)} CSV items with {features.shape[1]} features from {path}")
    return Dataset(features, labels, int(labels.max()) + 1, name)


def _min_max(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (x - lo) / span * _HEADROOM


def load_builtin(spec: DatasetSpec) -> Dataset:
    """Desk-scale datasets bundled with scikit-learn."""
    if spec.source == "digits":
        bunch = load_digits()
        # 8x8 pixels take values 0..16
        return Dataset(bunch.data / 17.0, bunch.target, 10, "digits")
    if spec.source == "blobs":
        x, y = make_blobs(
            n_samples=spec.samples,
            centers=spec.centers,
            n_features=2,
            cluster_std=spec.cluster_std,
            random_state=spec.seed,
        )
        return Dataset(_min_max(x), y, spec.centers, "blobs")
    if spec.source == "iris":
        bunch = load_iris()
        return Dataset(_min_max(bunch.data), bunch.target, 3, "iris")
    if spec.source == "wine":
        bunch = load_wine()
        return Dataset(_min_max(bunch.data), bunch.target, 3, "wine")
    raise DatasetError(f"{spec.source!r} is not a built-in dataset")


def load_dataset(spec: DatasetSpec) -> Tuple[Dataset, Dataset]:
    """
    Load a dataset and split it deterministically into (train, test).

    A test_fraction of 0 evaluates on the training items. ``limit`` caps the
    number of test items streamed through the accelerator.
    """
    if spec.source == "idx":
        if not spec.path or not spec.labels_path:
            raise DatasetError("idx datasets need 'path' and 'labels_path'")
        full = load_idx(spec.path, spec.labels_path)
    elif spec.source == "csv":
        if not spec.path:
            raise DatasetError("csv datasets need 'path'")
        full = load_csv(spec.path, spec.divisor, spec.has_header)
    else:
        full = load_builtin(spec)

    if spec.test_fraction == 0.0:
        train, test = full, full
    else:
        x_tr, x_te, y_tr, y_te = train_test_split(
            full.inputs,
            full.labels,
            test_size=spec.test_fraction,
            random_state=spec.seed,
            stratify=full.labels,
        )
        train = Dataset(x_tr, y_tr, full.class_count, f"{full.name}-train")
        test = Dataset(x_te, y_te, full.class_count, f"{full.name}-test")

    test = test.head(spec.limit)
    logger.info(f"Dataset {full.name}: {len(train)} train / {len(test)} test items")
    return train, test
