"""
Bit-exact two's-complement fixed-point words.
"""

from .format import (
    BitIndexError,
    FixedPointError,
    FixedPointFormat,
    FormatMismatchError,
    parse_format,
)
from .arithmetic import (
    FixedPointValue,
    add,
    convert,
    flip_bit,
    multiply,
    quantize,
    stuck_at,
    to_real,
)

__all__ = [
    "BitIndexError",
    "FixedPointError",
    "FixedPointFormat",
    "FormatMismatchError",
    "FixedPointValue",
    "add",
    "convert",
    "flip_bit",
    "multiply",
    "parse_format",
    "quantize",
    "stuck_at",
    "to_real",
]
