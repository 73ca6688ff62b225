"""
Combinational activation units: piece-wise linear logsig and satlin.

Both are evaluated in exact integer arithmetic on raw words so that scalar
and vectorized callers agree bit for bit.
"""

import math

import numpy as np

from src.fxp import FixedPointFormat, FixedPointValue
from src.fxp.arithmetic import to_signed_raw

SEGMENTS = 32
CLAMP = 8
KNOT_BITS = 24


def _build_knots() -> np.ndarray:
    one = 1 << KNOT_BITS
    half = SEGMENTS // 2
    step = 2 * CLAMP / SEGMENTS
    knots = [0] * (SEGMENTS + 1)
    for s in range(1, half):
        x = -CLAMP + s * step
        knots[s] = round(one / (1.0 + math.exp(-x)))
    knots[half] = one // 2
    # mirrored so that logsig(-x) + logsig(x) = 1 before output truncation
    for s in range(half + 1, SEGMENTS + 1):
        knots[s] = one - knots[SEGMENTS - s]
    return np.array(knots, dtype=np.int64)


_KNOTS = _build_knots()


def _as_output(result, scalar: bool):
    return int(result) if scalar else result


def logsig_raw(raw, src: FixedPointFormat, out: FixedPointFormat):
    """
    32-segment PWL sigmoid over [-8, 8], clamped to 0 and 1 outside.

    Args:
        raw: unsigned word(s) in format ``src``
        src: input format (typically an IMR format)
        out: output format; results saturate at its maximum

    Returns:
        Raw word(s) in format ``out``
    """
    scalar = np.ndim(raw) == 0
    r = to_signed_raw(np.asarray(raw, dtype=np.int64), src)
    f = src.fraction_bits
    # segment width is 2^-1, so the segment position is 2 * (x + 8)
    t = (r + (CLAMP << f)) << 1
    seg = t >> f
    rem = t - (seg << f)
    idx = np.clip(seg, 0, SEGMENTS - 1)
    lo = _KNOTS[idx]
    hi = _KNOTS[idx + 1]
    numer = (lo << f) + (hi - lo) * rem
    shift = KNOT_BITS + f - out.fraction_bits
    y = numer >> shift if shift >= 0 else numer << -shift
    one = 1 << out.fraction_bits
    y = np.where(seg < 0, 0, np.where(seg >= SEGMENTS, one, y))
    y = np.minimum(y, out.max_int) & out.mask
    return _as_output(y, scalar)


def satlin_raw(raw, src: FixedPointFormat, out: FixedPointFormat):
    """Positive saturating linear unit: clamp to [0, 1]."""
    scalar = np.ndim(raw) == 0
    r = to_signed_raw(np.asarray(raw, dtype=np.int64), src)
    shift = src.fraction_bits - out.fraction_bits
    clipped = np.clip(r, 0, 1 << src.fraction_bits)
    y = clipped >> shift if shift >= 0 else clipped << -shift
    y = np.minimum(y, out.max_int) & out.mask
    return _as_output(y, scalar)


def activate_raw(name: str, raw, src: FixedPointFormat, out: FixedPointFormat):
    if name == "logsig":
        return logsig_raw(raw, src, out)
    if name == "satlin":
        return satlin_raw(raw, src, out)
    raise ValueError(f"unknown activation {name!r}")


def logsig(x: FixedPointValue, out: FixedPointFormat) -> FixedPointValue:
    return FixedPointValue(logsig_raw(x.raw, x.format, out), out)


def satlin(x: FixedPointValue, out: FixedPointFormat) -> FixedPointValue:
    return FixedPointValue(satlin_raw(x.raw, x.format, out), out)


def activate_float(name: str, z: np.ndarray) -> np.ndarray:
    """Floating-point activations used by the trainer and float reference."""
    if name == "logsig":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))
    if name == "satlin":
        return np.clip(z, 0.0, 1.0)
    raise ValueError(f"unknown activation {name!r}")


def activation_gradient(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "logsig":
        return a * (1.0 - a)
    if name == "satlin":
        return ((z > 0.0) & (z < 1.0)).astype(np.float64)
    raise ValueError(f"unknown activation {name!r}")
