"""
Golden references: float forward pass and the bit-exact quantized forward pass.

The quantized reference accumulates each neuron as one flat wrapped sum, which
equals any adder-tree order because wrap-around addition is associative.
"""

import logging
from typing import List

import numpy as np

from src.fxp.arithmetic import convert_raw, quantize_raw, shift_floor, to_signed_raw

from .activations import activate_float, activate_raw
from .archive import WeightArchive
from .topology import DimensionError, LayerFormats, activation_format

logger = logging.getLogger(__name__)

MODES = ("float", "quantized")

# items per vectorized block, bounds the (items, inputs, outputs) product raster
ITEM_BLOCK = 128


def quantize_inputs(archive: WeightArchive, inputs: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if x.shape[1] != archive.topology.input_size:
        raise DimensionError(
            f"expected {archive.topology.input_size} inputs, got {x.shape[1]}"
        )
    return quantize_raw(x, archive.input_format)


def exact_products(x_raw: np.ndarray, w_raw: np.ndarray, fmts: LayerFormats) -> np.ndarray:
    """
    Unwrapped IMR-scaled products of every (item, input, output) triple.

    Args:
        x_raw: (items, I) raw inputs in ``fmts.ir``
        w_raw: (I, O) raw weights in ``fmts.wr``

    Returns:
        (items, I, O) signed integers before the IMR wrap
    """
    xs = to_signed_raw(x_raw, fmts.ir)
    ws = to_signed_raw(w_raw, fmts.wr)
    shift = fmts.ir.fraction_bits + fmts.wr.fraction_bits - fmts.imr.fraction_bits
    return shift_floor(xs[:, :, None] * ws[None, :, :], shift)


def accumulate(x_raw: np.ndarray, w_raw: np.ndarray, b_raw: np.ndarray, fmts: LayerFormats) -> np.ndarray:
    """Wrapped IMR pre-activations (items, O): bias plus every product."""
    out = np.empty((x_raw.shape[0], w_raw.shape[1]), dtype=np.int64)
    bias = convert_raw(b_raw, fmts.wr, fmts.imr)
    mask = fmts.imr.mask
    for start in range(0, x_raw.shape[0], ITEM_BLOCK):
        block = x_raw[start:start + ITEM_BLOCK]
        products = exact_products(block, w_raw, fmts) & mask
        out[start:start + ITEM_BLOCK] = (products.sum(axis=1) + bias) & mask
    return out


def forward_quantized(archive: WeightArchive, x_raw: np.ndarray) -> List[np.ndarray]:
    """Raw activations of every layer: quantized inputs first, output layer last."""
    layers = [np.atleast_2d(x_raw)]
    for j in range(archive.topology.num_matrices):
        fmts = archive.formats[j]
        z = accumulate(layers[-1], archive.weights[j], archive.biases[j], fmts)
        out = activation_format(archive.formats, j)
        layers.append(activate_raw(archive.topology.activation, z, fmts.imr, out))
    return layers


def predict_reference(archive: WeightArchive, inputs: np.ndarray, mode: str = "quantized") -> np.ndarray:
    """Class index of every input row; argmax ties go to the lowest index."""
    if mode == "quantized":
        outputs = forward_quantized(archive, quantize_inputs(archive, inputs))[-1]
    elif mode == "float":
        x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if x.shape[1] != archive.topology.input_size:
            raise DimensionError(f"expected {archive.topology.input_size} inputs, got {x.shape[1]}")
        for j in range(archive.topology.num_matrices):
            x = activate_float(
                archive.topology.activation,
                x @ archive.weight_values(j) + archive.bias_values(j),
            )
        outputs = x
    else:
        raise ValueError(f"unknown reference mode {mode!r}; expected one of {MODES}")
    return np.argmax(outputs, axis=1)


def classify_reference(archive: WeightArchive, inputs, mode: str = "quantized") -> int:
    """Class index of a single input vector."""
    vector = np.asarray(inputs, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionError(f"expected one input vector, got shape {vector.shape}")
    return int(predict_reference(archive, vector[None, :], mode)[0])


def reference_error(archive: WeightArchive, inputs: np.ndarray, labels: np.ndarray, mode: str = "quantized") -> float:
    """Inference error in percent."""
    if len(labels) == 0:
        raise DimensionError("cannot measure error on an empty dataset")
    predictions = predict_reference(archive, inputs, mode)
    return 100.0 * float(np.mean(predictions != np.asarray(labels)))
