"""
Accelerator configuration: PE count, register file geometry and cycle budget.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

from src.fxp import FixedPointFormat
from src.nn.archive import WeightArchive
from src.nn.topology import REGISTER_CLASSES, LayerFormats, NetworkTopology

FAULT_KINDS = ("stuck_at_0", "stuck_at_1", "transient")


class SimulationError(Exception):
    """Base exception for accelerator configuration and simulation errors."""
    pass


class InvalidFaultTargetError(SimulationError):
    """Raised when a fault names a register, bit or cycle the config lacks."""
    pass


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class AcceleratorConfig:
    """
    A streaming accelerator with ``num_pes`` multiplier lanes and an adder tree.

    Register file per cycle: P input registers, P weight registers and 2P-1
    intermediate registers (P multiplier outputs plus P-1 adder nodes). One
    accumulator per output neuron of the widest layer follows the IMRs and
    shares the IMR format.
    """

    topology: NetworkTopology
    num_pes: int
    formats: Tuple[LayerFormats, ...]

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        p = self.num_pes
        if p < 1 or p & (p - 1):
            raise SimulationError(f"num_pes must be a positive power of two, got {p}")
        if len(self.formats) != self.topology.num_matrices:
            raise SimulationError(
                f"{self.topology} needs {self.topology.num_matrices} layer formats, "
                f"got {len(self.formats)}"
            )

    @classmethod
    def from_archive(cls, archive: WeightArchive, num_pes: int) -> "AcceleratorConfig":
        return cls(archive.topology, num_pes, tuple(archive.formats))

    @property
    def accumulator_count(self) -> int:
        return max(self.topology.layer_sizes[1:])

    @property
    def tree_size(self) -> int:
        return 2 * self.num_pes - 1

    def accumulator_index(self, neuron: int) -> int:
        """IMR index addressing the accumulator of ``neuron``."""
        return self.tree_size + neuron

    def register_count(self, register_class: str, include_accumulators: bool = False) -> int:
        if register_class in ("IR", "WR"):
            return self.num_pes
        if register_class == "IMR":
            return self.tree_size + (self.accumulator_count if include_accumulators else 0)
        raise SimulationError(f"unknown register class {register_class!r}")

    def register_format(self, register_class: str, layer: int) -> FixedPointFormat:
        if not 0 <= layer < self.topology.num_matrices:
            raise SimulationError(f"layer {layer} outside [0, {self.topology.num_matrices})")
        return self.formats[layer].for_class(register_class)

    def class_width(self, register_class: str) -> int:
        """Physical register width: the widest format the class takes on."""
        return max(f.for_class(register_class).width for f in self.formats)

    def layer_cycles(self, j: int) -> int:
        return _ceil_div(self.topology.product_count(j), self.num_pes)

    def cycles_for_inference(self) -> int:
        return sum(self.layer_cycles(j) for j in range(self.topology.num_matrices))

    def layer_window(self, j: int) -> Tuple[int, int]:
        if not 0 <= j < self.topology.num_matrices:
            raise SimulationError(f"layer {j} outside [0, {self.topology.num_matrices})")
        start = sum(self.layer_cycles(i) for i in range(j))
        return start, start + self.layer_cycles(j)

    def total_fault_bits(self, include_accumulators: bool = False) -> int:
        return sum(
            self.register_count(c, include_accumulators) * self.class_width(c)
            for c in REGISTER_CLASSES
        )

    def fault_space_size(self, kind: str, include_accumulators: bool = False) -> int:
        """Distinct single-bit injections: S, or S*T when the cycle is also drawn."""
        if kind not in FAULT_KINDS:
            raise SimulationError(f"unknown fault kind {kind!r}; expected one of {FAULT_KINDS}")
        bits = self.total_fault_bits(include_accumulators)
        return bits * self.cycles_for_inference() if kind == "transient" else bits


def cycles_for_inference(config: AcceleratorConfig) -> int:
    """
    Clock cycles to classify one item.

    Example:
        784-128-10 on 64 PEs: (784*128 + 128*10) / 64 = 1588
    """
    return config.cycles_for_inference()


def layer_window(config: AcceleratorConfig, j: int) -> Tuple[int, int]:
    """[start, end) cycles of Layer_j."""
    return config.layer_window(j)


def total_fault_bits(config: AcceleratorConfig) -> int:
    return config.total_fault_bits()


def fault_space_size(config: AcceleratorConfig, kind: str) -> int:
    return config.fault_space_size(kind)


def uniform_formats(topology: NetworkTopology, formats: Sequence[str]) -> Tuple[LayerFormats, ...]:
    """Same IR/WR/IMR formats at every layer, given as "sS.dD.fF" strings."""
    ir, wr, imr = (FixedPointFormat.parse(f) for f in formats)
    return tuple(LayerFormats(ir, wr, imr) for _ in range(topology.num_matrices))
