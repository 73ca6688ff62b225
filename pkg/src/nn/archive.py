"""
Quantized weight archives and their on-disk layout.

An archive directory holds ``manifest.json`` plus one little-endian raw file
per weight matrix and bias vector::

    archive/
        manifest.json
        W0.bin  b0.bin
        W1.bin  b1.bin
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from src.fxp import FixedPointError, FixedPointFormat
from src.fxp.arithmetic import quantize_raw, real_raw, to_signed_raw

from .topology import DimensionError, LayerFormats, NetworkError, NetworkTopology
from .trainer import FloatNetwork

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ARCHIVE_VERSION = 1


class ArchiveError(NetworkError):
    """Raised when an archive directory is missing, malformed or inconsistent."""
    pass


@dataclass
class WeightArchive:
    """
    Trained parameters as raw fixed-point words.

    ``weights[j]`` has shape (|L_j|, |L_{j+1}|) in ``formats[j].wr``;
    ``biases[j]`` has length |L_{j+1}| in the same format.
    """

    topology: NetworkTopology
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    formats: List[LayerFormats]

    def __post_init__(self):
        n = self.topology.num_matrices
        if not len(self.weights) == len(self.biases) == len(self.formats) == n:
            raise DimensionError(f"{self.topology} needs {n} weight matrices, bias vectors and formats")
        for j in range(n):
            rows, cols = self.topology.matrix_shape(j)
            if self.weights[j].shape != (rows, cols) or self.biases[j].shape != (cols,):
                raise DimensionError(f"Layer_{j}: stored shapes do not match {self.topology}")
            mask = self.formats[j].wr.mask
            for name, raster in (("weights", self.weights[j]), ("biases", self.biases[j])):
                if raster.size and (raster.min() < 0 or raster.max() > mask):
                    raise ArchiveError(f"Layer_{j} {name} do not fit {self.formats[j].wr}")

    @property
    def input_format(self) -> FixedPointFormat:
        return self.formats[0].ir

    def weight_values(self, j: int) -> np.ndarray:
        return real_raw(self.weights[j], self.formats[j].wr)

    def bias_values(self, j: int) -> np.ndarray:
        return real_raw(self.biases[j], self.formats[j].wr)


def build_archive(network: FloatNetwork, formats: Sequence[LayerFormats]) -> WeightArchive:
    """Quantize float parameters into the WR format of each layer."""
    weights, biases = [], []
    for j, (w, b) in enumerate(zip(network.weights, network.biases)):
        wr = formats[j].wr
        weights.append(quantize_raw(w, wr))
        biases.append(quantize_raw(b, wr))
    return WeightArchive(network.topology, weights, biases, list(formats))


def _dtype_for(fmt: FixedPointFormat) -> str:
    # signed interpretation of the raw word must fit the on-disk integer
    if (fmt.signed and fmt.width <= 16) or (not fmt.signed and fmt.width <= 15):
        return "<i2"
    return "<i4"


def save_archive(archive: WeightArchive, directory: Union[str, Path]) -> Path:
    """
    Write an archive directory. Repeated saves of the same archive are
    byte-identical.

    Args:
        archive: parameters to store
        directory: target directory, created if necessary

    Returns:
        Path to the written manifest
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    layers = []
    for j in range(archive.topology.num_matrices):
        fmt = archive.formats[j].wr
        dtype = _dtype_for(fmt)
        files = {"weights": f"W{j}.bin", "biases": f"b{j}.bin"}
        for key, raster in (("weights", archive.weights[j]), ("biases", archive.biases[j])):
            words = np.ascontiguousarray(to_signed_raw(raster, fmt).astype(dtype))
            (directory / files[key]).write_bytes(words.tobytes(order="C"))
        layers.append({
            "shape": list(archive.topology.matrix_shape(j)),
            "formats": archive.formats[j].to_dict(),
            "dtype": dtype,
            **files,
        })

    manifest = {
        "version": ARCHIVE_VERSION,
        "topology": list(archive.topology.layer_sizes),
        "activation": archive.topology.activation,
        "byte_order": "little",
        "layers": layers,
    }
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Saved archive {archive.topology} to {directory}")
    return path


def load_archive(directory: Union[str, Path]) -> WeightArchive:
    """Read an archive directory written by :func:`save_archive`."""
    directory = Path(directory)
    path = directory / MANIFEST_NAME
    if not path.exists():
        raise ArchiveError(f"No archive manifest at {path}")

    try:
        manifest = json.loads(path.read_text())
        if manifest.get("byte_order", "little") != "little":
            raise ArchiveError(f"{path}: unsupported byte order {manifest['byte_order']!r}")
        topology = NetworkTopology(tuple(manifest["topology"]), manifest["activation"])
        layers = manifest["layers"]
    except (KeyError, TypeError, ValueError) as e:
        raise ArchiveError(f"Malformed archive manifest {path}: {e}") from e

    if len(layers) != topology.num_matrices:
        raise ArchiveError(f"{path}: {len(layers)} layer entries for topology {topology}")

    weights, biases, formats = [], [], []
    for j, entry in enumerate(layers):
        try:
            fmts = LayerFormats.from_dict(entry["formats"])
            files = {key: directory / entry[key] for key in ("weights", "biases")}
            dtype = np.dtype(entry["dtype"])
        except (FixedPointError, KeyError, TypeError, ValueError) as e:
            raise ArchiveError(f"Malformed Layer_{j} entry in {path}: {e}") from e

        rows, cols = topology.matrix_shape(j)
        rasters = {}
        for key, shape in (("weights", (rows, cols)), ("biases", (cols,))):
            file_path = files[key]
            if not file_path.exists():
                raise ArchiveError(f"Missing archive file {file_path}")
            words = np.frombuffer(file_path.read_bytes(), dtype=dtype)
            if words.size != int(np.prod(shape)):
                raise ArchiveError(f"{file_path}: expected {int(np.prod(shape))} words, found {words.size}")
            rasters[key] = words.astype(np.int64).reshape(shape) & fmts.wr.mask
        weights.append(rasters["weights"])
        biases.append(rasters["biases"])
        formats.append(fmts)

    logger.info(f"Loaded archive {topology} ({topology.activation}) from {directory}")
    return WeightArchive(topology, weights, biases, formats)
