"""
Per-layer precision calibration.

Each register class gets the narrowest sign/digit split that holds every value
it latches during a fault-free run over the dataset; the rest of the class
width becomes fraction bits.

With ``wr_headroom`` h > 0 the WR formats get h digit bits beyond the minimum;
for h >= 1 bit N-2 of every stored parameter repeats its sign bit.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.fxp import FixedPointError, FixedPointFormat
from src.fxp.arithmetic import quantize_raw, real_raw, shift_floor, to_signed_raw

from .activations import activate_raw
from .archive import WeightArchive
from .datasets import Dataset
from .reference import ITEM_BLOCK, accumulate, exact_products, quantize_inputs
from .topology import REGISTER_CLASSES, LayerFormats, NetworkError
from .trainer import FloatNetwork

logger = logging.getLogger(__name__)


class CalibrationError(NetworkError):
    """Raised when a value range cannot be represented in the class width."""
    pass


def digit_bits_for(max_abs: float) -> int:
    """Smallest d >= 0 with max_abs < 2^d."""
    if not math.isfinite(max_abs):
        raise CalibrationError(f"cannot calibrate a non-finite range ({max_abs})")
    if max_abs < 1.0:
        return 0
    return math.frexp(max_abs)[1]


def _format(width: int, sign: int, digits: int, what: str) -> FixedPointFormat:
    try:
        return FixedPointFormat.for_width(width, sign, digits)
    except FixedPointError as e:
        raise CalibrationError(f"{what}: {e}") from e


def partial_sum_bounds(
    x_raw: np.ndarray, w_raw: np.ndarray, b_raw: np.ndarray, fmts: LayerFormats
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact extremes any partial sum of a neuron can reach, per item.

    Every subset sum of the bias and the neuron's products lies between the
    sum of the negative terms and the sum of the positive terms.

    Returns:
        (pos, neg) integer arrays of shape (items, O) in IMR units
    """
    bias = shift_floor(
        to_signed_raw(b_raw, fmts.wr), fmts.wr.fraction_bits - fmts.imr.fraction_bits
    )
    pos = np.empty((x_raw.shape[0], w_raw.shape[1]), dtype=np.int64)
    neg = np.empty_like(pos)
    for start in range(0, x_raw.shape[0], ITEM_BLOCK):
        products = exact_products(x_raw[start:start + ITEM_BLOCK], w_raw, fmts)
        pos[start:start + ITEM_BLOCK] = np.maximum(products, 0).sum(axis=1) + np.maximum(bias, 0)
        neg[start:start + ITEM_BLOCK] = np.minimum(products, 0).sum(axis=1) + np.minimum(bias, 0)
    return pos, neg


def calibrate(
    network: FloatNetwork,
    dataset: Dataset,
    total_width: int = 16,
    widths: Optional[Dict[str, int]] = None,
    wr_headroom: int = 0,
) -> List[LayerFormats]:
    """
    Derive the IR/WR/IMR formats of every layer from data.

    Args:
        network: trained float parameters
        dataset: calibration items (the training set in the CLI)
        total_width: width of every class not named in ``widths``
        widths: optional per-class widths, e.g. {"IMR": 23}
        wr_headroom: spare WR digit bits; 0 gives the minimum digit count

    Returns:
        One LayerFormats per weight matrix
    """
    if len(dataset) == 0:
        raise CalibrationError("calibration needs a nonempty dataset")
    if wr_headroom < 0:
        raise CalibrationError(f"wr_headroom must be >= 0, got {wr_headroom}")
    class_widths = {c: total_width for c in REGISTER_CLASSES}
    class_widths.update(widths or {})

    x = dataset.inputs
    ir = _format(
        class_widths["IR"], int(bool((x < 0).any())), digit_bits_for(float(np.abs(x).max())), "IR_0"
    )
    hidden_ir = _format(class_widths["IR"], 0, 0, "hidden IR")
    x_raw = quantize_raw(x, ir)

    formats = []
    for j in range(network.topology.num_matrices):
        w, b = network.weights[j], network.biases[j]
        params = np.concatenate([w.ravel(), b])
        wr = _format(
            class_widths["WR"],
            int(bool((params < 0).any())),
            digit_bits_for(float(np.abs(params).max()) * 2 ** wr_headroom),
            f"WR_{j}",
        )
        w_raw, b_raw = quantize_raw(w, wr), quantize_raw(b, wr)
        imr = _calibrate_imr(j, x_raw, ir, w_raw, b_raw, wr, class_widths["IMR"])
        fmts = LayerFormats(ir, wr, imr)
        formats.append(fmts)
        logger.info(f"Layer_{j}: IR={ir} WR={wr} IMR={imr}")

        z = accumulate(x_raw, w_raw, b_raw, fmts)
        x_raw = activate_raw(network.topology.activation, z, imr, hidden_ir)
        ir = hidden_ir

    return formats


def _calibrate_imr(
    j: int,
    x_raw: np.ndarray,
    ir: FixedPointFormat,
    w_raw: np.ndarray,
    b_raw: np.ndarray,
    wr: FixedPointFormat,
    width: int,
) -> FixedPointFormat:
    xs = real_raw(x_raw, ir)
    ws = real_raw(w_raw, wr)
    bs = real_raw(b_raw, wr)
    pos = np.maximum(xs, 0) @ np.maximum(ws, 0) + np.minimum(xs, 0) @ np.minimum(ws, 0) + np.maximum(bs, 0)
    neg = np.maximum(xs, 0) @ np.minimum(ws, 0) + np.minimum(xs, 0) @ np.maximum(ws, 0) + np.minimum(bs, 0)
    sign = int(bool((neg < 0).any()))
    digits = digit_bits_for(float(max(pos.max(), -neg.min())))

    # floored products can exceed the float estimate, so widen until exact
    while True:
        imr = _format(width, sign, digits, f"IMR_{j}")
        exact_pos, exact_neg = partial_sum_bounds(x_raw, w_raw, b_raw, LayerFormats(ir, wr, imr))
        if not imr.signed and exact_neg.min() < 0:
            sign = 1
            continue
        if exact_pos.max() <= imr.max_int and exact_neg.min() >= imr.min_int:
            return imr
        logger.debug(f"IMR_{j}: {imr} wraps on exact partial sums, widening digits")
        digits += 1


def check_no_wrap(archive: WeightArchive, inputs: np.ndarray) -> int:
    """
    Count (item, layer, neuron) partial sums that leave the IMR range.

    Zero means no fault-free run over ``inputs`` can wrap in the adder tree
    or the accumulators.
    """
    x_raw = quantize_inputs(archive, inputs)
    violations = 0
    for j in range(archive.topology.num_matrices):
        fmts = archive.formats[j]
        pos, neg = partial_sum_bounds(x_raw, archive.weights[j], archive.biases[j], fmts)
        violations += int(np.count_nonzero((pos > fmts.imr.max_int) | (neg < fmts.imr.min_int)))
        if j + 1 < archive.topology.num_matrices:
            z = accumulate(x_raw, archive.weights[j], archive.biases[j], fmts)
            x_raw = activate_raw(archive.topology.activation, z, fmts.imr, archive.formats[j + 1].ir)
    if violations:
        logger.warning(f"{violations} partial sums exceed their IMR range")
    return violations
