"""
Network topology and per-layer register formats.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

from src.fxp import FixedPointFormat

ACTIVATIONS = ("logsig", "satlin")
REGISTER_CLASSES = ("IR", "WR", "IMR")


class NetworkError(Exception):
    """Base exception for network, dataset and archive errors."""
    pass


class DimensionError(NetworkError):
    """Raised when vector or matrix sizes disagree with the topology."""
    pass


@dataclass(frozen=True)
class NetworkTopology:
    """
    Fully-connected layer sizes |L_0| .. |L_{N-1}| and the shared activation.

    Layer_j is the matrix multiplication between L_j and L_{j+1}, so a
    topology with N layers has N-1 weight matrices.
    """

    layer_sizes: Tuple[int, ...]
    activation: str = "logsig"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise NetworkError(f"need at least 2 layers, got {self.layer_sizes}")
        if any(s < 1 for s in self.layer_sizes):
            raise NetworkError(f"layer sizes must be >= 1, got {self.layer_sizes}")
        if self.activation not in ACTIVATIONS:
            raise NetworkError(
                f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )

    @property
    def num_matrices(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def matrix_shape(self, j: int) -> Tuple[int, int]:
        if not 0 <= j < self.num_matrices:
            raise DimensionError(f"layer index {j} outside [0, {self.num_matrices})")
        return self.layer_sizes[j], self.layer_sizes[j + 1]

    def product_count(self, j: int) -> int:
        rows, cols = self.matrix_shape(j)
        return rows * cols

    def __str__(self) -> str:
        return "-".join(str(s) for s in self.layer_sizes)


@dataclass(frozen=True)
class LayerFormats:
    """Formats of the IR, WR and IMR registers while Layer_j is computed."""

    ir: FixedPointFormat
    wr: FixedPointFormat
    imr: FixedPointFormat

    def for_class(self, register_class: str) -> FixedPointFormat:
        if register_class == "IR":
            return self.ir
        if register_class == "WR":
            return self.wr
        if register_class == "IMR":
            return self.imr
        raise NetworkError(f"unknown register class {register_class!r}")

    def to_dict(self) -> Dict[str, str]:
        return {"IR": str(self.ir), "WR": str(self.wr), "IMR": str(self.imr)}

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "LayerFormats":
        return cls(
            ir=FixedPointFormat.parse(data["IR"]),
            wr=FixedPointFormat.parse(data["WR"]),
            imr=FixedPointFormat.parse(data["IMR"]),
        )


def output_format(formats: Sequence[LayerFormats]) -> FixedPointFormat:
    """Activation outputs of the last layer: fraction-only, IR width."""
    return FixedPointFormat.for_width(formats[-1].ir.width, 0, 0)


def activation_format(formats: Sequence[LayerFormats], j: int) -> FixedPointFormat:
    """Format the activation unit of Layer_j writes into."""
    if j + 1 < len(formats):
        return formats[j + 1].ir
    return output_format(formats)
