"""
Bit-level sparsity of latched register values.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import polars as pl

logger = logging.getLogger(__name__)

BUCKETS = 10


class AnalysisError(Exception):
    """Raised when a report has nothing to summarize."""
    pass


@dataclass
class ClassSparsity:
    register_class: str
    values: int
    zero_bits: int
    one_bits: int

    @property
    def ratio(self) -> Optional[float]:
        """Zeros per one; None stands for an all-zero class."""
        return self.zero_bits / self.one_bits if self.one_bits else None


@dataclass
class SparsityReport:
    classes: Dict[str, ClassSparsity] = field(default_factory=dict)
    # IR values per 0.1-wide bucket over [0, 1)
    ir_histogram: List[int] = field(default_factory=lambda: [0] * BUCKETS)

    @property
    def zero_bits(self) -> int:
        return sum(c.zero_bits for c in self.classes.values())

    @property
    def one_bits(self) -> int:
        return sum(c.one_bits for c in self.classes.values())

    @property
    def ratio(self) -> Optional[float]:
        return self.zero_bits / self.one_bits if self.one_bits else None

    def frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "register_class": [c.register_class for c in self.classes.values()],
                "values": [c.values for c in self.classes.values()],
                "zero_bits": [c.zero_bits for c in self.classes.values()],
                "one_bits": [c.one_bits for c in self.classes.values()],
                "ratio": [c.ratio for c in self.classes.values()],
            },
            schema={
                "register_class": pl.Utf8,
                "values": pl.Int64,
                "zero_bits": pl.Int64,
                "one_bits": pl.Int64,
                "ratio": pl.Float64,
            },
        )

    def histogram_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "bucket_low": [b / BUCKETS for b in range(BUCKETS)],
                "bucket_high": [(b + 1) / BUCKETS for b in range(BUCKETS)],
                "count": self.ir_histogram,
            },
            schema={"bucket_low": pl.Float64, "bucket_high": pl.Float64, "count": pl.Int64},
        )


def count_ones(raw: np.ndarray, width: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.int64)
    ones = np.zeros_like(raw)
    for b in range(int(np.max(width, initial=1))):
        ones += (raw >> b) & 1
    return ones


def sparsity(trace) -> SparsityReport:
    """
    Count zero and one bits of every latched value per register class, and
    bucket the IR values by magnitude.

    Args:
        trace: a RegisterTrace or its polars frame
    """
    frame = trace.frame() if hasattr(trace, "frame") else trace
    if frame.height == 0:
        raise AnalysisError("sparsity needs a nonempty trace")

    report = SparsityReport()
    for register_class in sorted(frame.get_column("register_class").unique().to_list()):
        rows = frame.filter(pl.col("register_class") == register_class)
        raw = rows.get_column("raw").to_numpy()
        width = rows.get_column("width").to_numpy()
        ones = int(count_ones(raw, width).sum())
        report.classes[register_class] = ClassSparsity(
            register_class, rows.height, int(width.sum()) - ones, ones
        )

    ir = frame.filter(pl.col("register_class") == "IR")
    if ir.height:
        raw = ir.get_column("raw").to_numpy().astype(np.int64)
        fraction = ir.get_column("fraction_bits").to_numpy().astype(np.int64)
        # exact bucket floor(10 * value) of unsigned fraction words
        buckets = np.clip((raw * BUCKETS) >> fraction, 0, BUCKETS - 1)
        report.ir_histogram = np.bincount(buckets, minlength=BUCKETS).tolist()

    logger.info(
        f"Sparsity: {report.zero_bits} zero bits / {report.one_bits} one bits"
        + (f" (ratio {report.ratio:.2f})" if report.ratio is not None else "")
    )
    return report
