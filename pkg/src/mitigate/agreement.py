"""
How often the sign bit and the MSB of latched values agree.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np
import polars as pl

from .masking import MitigationError

logger = logging.getLogger(__name__)


def _signed_rows(frame: pl.DataFrame, register_classes: Optional[Sequence[str]]) -> pl.DataFrame:
    rows = frame.filter((pl.col("sign_bits") == 1) & (pl.col("width") >= 2))
    if register_classes is not None:
        rows = rows.filter(pl.col("register_class").is_in(list(register_classes)))
    return rows


def sign_msb_agreement(trace, register_classes: Optional[Sequence[str]] = None) -> float:
    """
    Fraction of signed latched values whose bit N-1 equals bit N-2.

    Args:
        trace: a RegisterTrace (or its polars frame)
        register_classes: restrict to these classes, e.g. ["WR", "IMR"]

    Returns:
        Agreement in [0, 1]
    """
    frame = trace.frame() if hasattr(trace, "frame") else trace
    rows = _signed_rows(frame, register_classes)
    if rows.height == 0:
        raise MitigationError("sign/MSB agreement needs a nonempty trace of signed values")
    raw = rows.get_column("raw").to_numpy().astype(np.int64)
    width = rows.get_column("width").to_numpy().astype(np.int64)
    agree = ((raw >> (width - 1)) & 1) == ((raw >> (width - 2)) & 1)
    return float(agree.mean())


def agreement_by_class(trace) -> Dict[str, float]:
    """Agreement per register class that latched any signed value."""
    frame = trace.frame() if hasattr(trace, "frame") else trace
    result = {}
    for register_class in sorted(_signed_rows(frame, None).get_column("register_class").unique().to_list()):
        result[register_class] = sign_msb_agreement(frame, [register_class])
        logger.info(f"Sign/MSB agreement {register_class}: {result[register_class]:.4f}")
    return result
