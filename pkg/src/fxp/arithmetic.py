"""
Bit-exact fixed-point arithmetic.

Raw helpers (the ``*_raw`` functions) take unsigned bit patterns as Python
ints or numpy int64 arrays and return the same kind, so the cycle simulator
and the vectorized engine share one definition of every operation. The
value-level API (``quantize``, ``multiply``, ...) wraps them for single words.
"""

import math
from dataclasses import dataclass

import numpy as np

from .format import BitIndexError, FixedPointFormat, FormatMismatchError


def wrap_raw(x, fmt: FixedPointFormat):
    """Reduce an integer modulo 2^width into an unsigned bit pattern."""
    return x & fmt.mask


def to_signed_raw(raw, fmt: FixedPointFormat):
    """Interpret an unsigned bit pattern as the format's integer value."""
    if not fmt.signed:
        return raw
    w = fmt.width
    return raw - (((raw >> (w - 1)) & 1) << w)


def shift_floor(x, shift: int):
    # arithmetic right shift floors toward -inf for ints and int64 arrays
    return x >> shift if shift >= 0 else x << -shift


def quantize_raw(x, fmt: FixedPointFormat):
    """Scale by 2^f, floor, saturate to the format range, encode."""
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        product = x * (2.0 ** fmt.fraction_bits)
        if math.isinf(product):
            scaled = fmt.max_int if product > 0 else fmt.min_int
        else:
            scaled = math.floor(product)
        return min(max(scaled, fmt.min_int), fmt.max_int) & fmt.mask
    scaled = np.floor(np.asarray(x, dtype=np.float64) * (2.0 ** fmt.fraction_bits))
    clipped = np.clip(scaled, fmt.min_int, fmt.max_int).astype(np.int64)
    return clipped & fmt.mask


def real_raw(raw, fmt: FixedPointFormat):
    """Real value of a raw word (float, or float64 array)."""
    signed = to_signed_raw(raw, fmt)
    if isinstance(signed, np.ndarray):
        return signed.astype(np.float64) * fmt.resolution
    return signed * fmt.resolution


def mul_raw(a, fa: FixedPointFormat, b, fb: FixedPointFormat, out: FixedPointFormat):
    """
    Exact product narrowed into ``out``: fraction floored, integer part wrapped.

    For int64 arrays the exact product must stay below 2^63, which holds for
    any pair of formats where at least one operand is signed.
    """
    product = to_signed_raw(a, fa) * to_signed_raw(b, fb)
    shift = fa.fraction_bits + fb.fraction_bits - out.fraction_bits
    return shift_floor(product, shift) & out.mask


def add_raw(a, b, fmt: FixedPointFormat):
    """Two's-complement wrap-around addition."""
    return (a + b) & fmt.mask


def convert_raw(raw, src: FixedPointFormat, dst: FixedPointFormat):
    """Re-express a word in another format (floor on fraction, wrap on digits)."""
    shift = src.fraction_bits - dst.fraction_bits
    return shift_floor(to_signed_raw(raw, src), shift) & dst.mask


def stuck_raw(raw, mask: int, level: int):
    """Force every bit in ``mask`` to ``level``."""
    return raw | mask if level else raw & ~mask


@dataclass(frozen=True)
class FixedPointValue:
    """One register word: an unsigned bit pattern tagged with its format."""

    raw: int
    format: FixedPointFormat

    def __post_init__(self):
        if not 0 <= self.raw <= self.format.mask:
            raise BitIndexError(
                f"raw 0x{self.raw:x} does not fit {self.format} "
                f"({self.format.width} bits)"
            )

    @property
    def signed(self) -> int:
        return to_signed_raw(self.raw, self.format)

    def bit(self, i: int) -> int:
        _check_index(self.format, i)
        return (self.raw >> i) & 1

    def hex(self) -> str:
        nibbles = (self.format.width + 3) // 4
        return f"0x{self.raw:0{nibbles}x}"

    def __float__(self) -> float:
        return to_real(self)


def _check_index(fmt: FixedPointFormat, i: int) -> None:
    if not 0 <= i < fmt.width:
        raise BitIndexError(f"bit index {i} outside [0, {fmt.width}) for {fmt}")


def quantize(x: float, fmt: FixedPointFormat) -> FixedPointValue:
    """
    Encode a real number, truncating toward -inf and saturating.

    Example:
        >>> quantize(0.5, FixedPointFormat.parse("s1.d4.f11")).raw
        1024
    """
    return FixedPointValue(int(quantize_raw(float(x), fmt)), fmt)


def to_real(v: FixedPointValue) -> float:
    return real_raw(v.raw, v.format)


def multiply(a: FixedPointValue, b: FixedPointValue, out: FixedPointFormat) -> FixedPointValue:
    return FixedPointValue(int(mul_raw(a.raw, a.format, b.raw, b.format, out)), out)


def add(a: FixedPointValue, b: FixedPointValue) -> FixedPointValue:
    if a.format != b.format:
        raise FormatMismatchError(f"cannot add {a.format} and {b.format}")
    return FixedPointValue(add_raw(a.raw, b.raw, a.format), a.format)


def convert(v: FixedPointValue, out: FixedPointFormat) -> FixedPointValue:
    return FixedPointValue(int(convert_raw(v.raw, v.format, out)), out)


def flip_bit(v: FixedPointValue, i: int) -> FixedPointValue:
    _check_index(v.format, i)
    return FixedPointValue(v.raw ^ (1 << i), v.format)


def stuck_at(v: FixedPointValue, i: int, level: int) -> FixedPointValue:
    _check_index(v.format, i)
    if level not in (0, 1):
        raise ValueError(f"stuck level must be 0 or 1, got {level}")
    return FixedPointValue(stuck_raw(v.raw, 1 << i, level), v.format)
