"""
Fault application at register write time.
"""

from dataclasses import dataclass
from typing import FrozenSet, Tuple

from src.accel.config import AcceleratorConfig, InvalidFaultTargetError
from src.fxp import FixedPointValue
from src.fxp.arithmetic import stuck_raw

from .spec import FaultSpec


@dataclass(frozen=True)
class ActiveFault:
    """A FaultSpec resolved against one accelerator: its target and cycle window."""

    spec: FaultSpec
    window: Tuple[int, int]

    @property
    def register_class(self) -> str:
        return self.spec.register_class

    @property
    def index(self) -> int:
        return self.spec.index

    @property
    def mask(self) -> int:
        return self.spec.mask

    def targets(self, register_class: str, index: int) -> bool:
        return register_class == self.spec.register_class and index == self.spec.index

    def active(self, cycle: int) -> bool:
        return self.window[0] <= cycle < self.window[1]

    def apply_raw(self, raw):
        """
        Corrupt written word(s) regardless of the cycle.

        Returns:
            (corrupted, flipped) where ``flipped`` marks the bits that changed
        """
        kind = self.spec.kind
        if kind == "transient":
            corrupted = raw ^ self.mask
        else:
            corrupted = stuck_raw(raw, self.mask, 1 if kind == "stuck_at_1" else 0)
        return corrupted, corrupted ^ raw

    def apply(self, value: FixedPointValue, cycle: int) -> Tuple[FixedPointValue, FrozenSet[int]]:
        if not self.active(cycle):
            return value, frozenset()
        corrupted, flipped = self.apply_raw(value.raw)
        return (
            FixedPointValue(corrupted, value.format),
            frozenset(b for b in self.spec.bits if (flipped >> b) & 1),
        )


def activate(spec: FaultSpec, config: AcceleratorConfig) -> ActiveFault:
    """
    Check a fault against an accelerator and resolve its active window.

    Permanent faults span their scope; transient faults span their one cycle.
    """
    num_layers = config.topology.num_matrices
    if spec.layer is not None and spec.layer >= num_layers:
        raise InvalidFaultTargetError(f"layer {spec.layer} outside [0, {num_layers})")

    count = config.register_count(spec.register_class, include_accumulators=True)
    if spec.index >= count:
        raise InvalidFaultTargetError(
            f"{spec.register_class}[{spec.index}] does not exist (only {count} registers)"
        )

    layers = range(num_layers) if spec.layer is None else [spec.layer]
    width = min(config.register_format(spec.register_class, j).width for j in layers)
    if spec.bits[-1] >= width:
        raise InvalidFaultTargetError(
            f"bit {spec.bits[-1]} outside the {width}-bit {spec.register_class} register"
        )

    if spec.layer is None:
        scope = (0, config.cycles_for_inference())
    else:
        scope = config.layer_window(spec.layer)

    if spec.is_transient:
        if not scope[0] <= spec.cycle < scope[1]:
            raise InvalidFaultTargetError(f"cycle {spec.cycle} outside scope window {scope}")
        return ActiveFault(spec, (spec.cycle, spec.cycle + 1))
    return ActiveFault(spec, scope)


def apply(fault: ActiveFault, value: FixedPointValue, cycle: int) -> Tuple[FixedPointValue, FrozenSet[int]]:
    """Corrupt one register write; returns the value and the bits that changed."""
    return fault.apply(value, cycle)
