"""
Masking-based fault mitigation given the set of bits a fault flipped.

The ``*_raw`` variants work on unsigned words (ints or int64 arrays) with the
flipped-bit record as a bitmask of the same shape; the simulators call them
on every corrected register write.
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable

import numpy as np

from src.fxp import FixedPointFormat, FixedPointValue

TECHNIQUES = ("none", "word", "bit", "hybrid")


class MitigationError(Exception):
    """Raised for unknown techniques or malformed detection reports."""
    pass


@dataclass(frozen=True)
class DetectionReport:
    """A register value after a fault together with the bits that changed."""

    value: FixedPointValue
    flipped: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "flipped", frozenset(self.flipped))
        width = self.value.format.width
        if any(not 0 <= b < width for b in self.flipped):
            raise MitigationError(f"flipped bits {sorted(self.flipped)} outside [0, {width})")

    @property
    def flipped_mask(self) -> int:
        return sum(1 << b for b in self.flipped)


def _finish(result, scalar: bool):
    return int(result) if scalar else result


def word_masking_raw(raw, flipped, fmt: FixedPointFormat):
    """Zero the whole word when any bit was flipped."""
    scalar = np.ndim(raw) == 0 and np.ndim(flipped) == 0
    return _finish(np.where(np.asarray(flipped) != 0, 0, raw), scalar)


def bit_masking_raw(raw, flipped, fmt: FixedPointFormat):
    """Overwrite flipped non-sign bits with the current sign bit."""
    n = fmt.width
    if n < 2:
        return word_masking_raw(raw, flipped, fmt)
    scalar = np.ndim(raw) == 0 and np.ndim(flipped) == 0
    raw = np.asarray(raw, dtype=np.int64)
    low = np.asarray(flipped, dtype=np.int64) & ((1 << (n - 1)) - 1)
    sign = (raw >> (n - 1)) & 1
    return _finish((raw & ~low) | (low * sign), scalar)


def hybrid_raw(raw, flipped, fmt: FixedPointFormat):
    """
    Word masking when both top bits flipped, else restore the sign from the
    MSB (bit N-2) and then mask every flipped lower bit with the sign.
    """
    n = fmt.width
    if n < 2:
        return word_masking_raw(raw, flipped, fmt)
    scalar = np.ndim(raw) == 0 and np.ndim(flipped) == 0
    raw = np.asarray(raw, dtype=np.int64)
    flipped = np.asarray(flipped, dtype=np.int64)
    top = 1 << (n - 1)
    msb = 1 << (n - 2)

    both = ((flipped & top) != 0) & ((flipped & msb) != 0)
    msb_bit = (raw >> (n - 2)) & 1
    result = np.where((flipped & top) != 0, (raw & ~top) | (msb_bit << (n - 1)), raw)
    sign = (result >> (n - 1)) & 1
    low = flipped & (top - 1)
    result = (result & ~low) | (low * sign)
    return _finish(np.where(both, 0, result), scalar)


def mitigate_raw(technique: str, raw, flipped, fmt: FixedPointFormat):
    if technique == "none":
        return raw
    if technique == "word":
        return word_masking_raw(raw, flipped, fmt)
    if technique == "bit":
        return bit_masking_raw(raw, flipped, fmt)
    if technique == "hybrid":
        return hybrid_raw(raw, flipped, fmt)
    raise MitigationError(f"unknown mitigation {technique!r}; expected one of {TECHNIQUES}")


def _corrected(report: DetectionReport, technique: str) -> FixedPointValue:
    fmt = report.value.format
    raw = mitigate_raw(technique, report.value.raw, report.flipped_mask, fmt)
    return FixedPointValue(int(raw), fmt)


def word_masking(report: DetectionReport) -> FixedPointValue:
    return _corrected(report, "word")


def bit_masking(report: DetectionReport) -> FixedPointValue:
    """A flipped sign bit is left as is and then used to mask the other bits."""
    return _corrected(report, "bit")


def hybrid(report: DetectionReport) -> FixedPointValue:
    return _corrected(report, "hybrid")


def mitigate(technique: str, value: FixedPointValue, flipped: Iterable[int]) -> FixedPointValue:
    """Apply a technique by name to a value and its flipped-bit set."""
    return _corrected(DetectionReport(value, frozenset(flipped)), technique)
