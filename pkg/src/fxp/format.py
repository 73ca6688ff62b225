"""
Fixed-point word formats: sign, digit and fraction field widths.
"""

import re
from dataclasses import dataclass
from typing import Tuple

MAX_WIDTH = 32

COMPONENTS = ("sign", "digit", "fraction", "non-sign")

_FORMAT_RE = re.compile(r"^s(\d+)\.d(\d+)\.f(\d+)$")


class FixedPointError(Exception):
    """Base exception for fixed-point format and arithmetic errors."""
    pass


class FormatMismatchError(FixedPointError):
    """Raised when an operation needs two operands of the same format."""
    pass


class BitIndexError(FixedPointError, IndexError):
    """Raised when a bit index falls outside the register width."""
    pass


@dataclass(frozen=True)
class FixedPointFormat:
    """
    Two's-complement fixed-point layout of one register word.

    Bits are laid out from the top as sign (0 or 1 bit), digit (integer part)
    and fraction. The real value of a raw word is its signed (or unsigned,
    when there is no sign bit) interpretation times 2^(-fraction_bits).
    """

    sign_bits: int
    digit_bits: int
    fraction_bits: int

    def __post_init__(self):
        if self.sign_bits not in (0, 1):
            raise FixedPointError(f"sign_bits must be 0 or 1, got {self.sign_bits}")
        if self.digit_bits < 0 or self.fraction_bits < 0:
            raise FixedPointError(
                f"digit/fraction widths must be >= 0, got "
                f"d={self.digit_bits} f={self.fraction_bits}"
            )
        if not 1 <= self.width <= MAX_WIDTH:
            raise FixedPointError(
                f"total width must be in [1, {MAX_WIDTH}], got {self.width}"
            )

    @classmethod
    def parse(cls, text: str) -> "FixedPointFormat":
        """
        Parse the "sS.dD.fF" notation.

        Example:
            >>> FixedPointFormat.parse("s1.d4.f11").width
            16
        """
        match = _FORMAT_RE.match(text.strip())
        if match is None:
            raise FixedPointError(f"Malformed format string: {text!r}")
        sign, digit, fraction = (int(g) for g in match.groups())
        return cls(sign, digit, fraction)

    @classmethod
    def for_width(cls, width: int, sign_bits: int, digit_bits: int) -> "FixedPointFormat":
        """Fill the rest of a fixed total width with fraction bits."""
        fraction = width - sign_bits - digit_bits
        if fraction < 0:
            raise FixedPointError(
                f"s{sign_bits}.d{digit_bits} does not fit in {width} bits"
            )
        return cls(sign_bits, digit_bits, fraction)

    def __str__(self) -> str:
        return f"s{self.sign_bits}.d{self.digit_bits}.f{self.fraction_bits}"

    @property
    def width(self) -> int:
        return self.sign_bits + self.digit_bits + self.fraction_bits

    @property
    def signed(self) -> bool:
        return self.sign_bits == 1

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    @property
    def min_int(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max_int(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.fraction_bits

    @property
    def min_value(self) -> float:
        return self.min_int * self.resolution

    @property
    def max_value(self) -> float:
        return self.max_int * self.resolution

    def component_bits(self, component: str) -> Tuple[int, ...]:
        """
        Bit indices (LSB = 0) occupied by one field of the word.

        Args:
            component: "sign", "digit", "fraction" or "non-sign"

        Returns:
            Ascending tuple of bit indices; empty when the field has no bits
        """
        f, d = self.fraction_bits, self.digit_bits
        if component == "fraction":
            return tuple(range(0, f))
        if component == "digit":
            return tuple(range(f, f + d))
        if component == "sign":
            return tuple(range(f + d, self.width))
        if component == "non-sign":
            return tuple(range(0, f + d))
        raise FixedPointError(
            f"Unknown component {component!r}; expected one of {COMPONENTS}"
        )


def parse_format(text: str) -> FixedPointFormat:
    return FixedPointFormat.parse(text)
