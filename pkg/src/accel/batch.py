"""
Vectorized replay of the cycle schedule over a whole dataset.

The engine caches the fault-free per-layer values and evaluates a fault by
correcting only what the targeted register feeds: every tree write and every
accumulator update is a wrap-around addition, so a corrupted register shifts
its neuron's pre-activation by (corrupted - original) modulo the IMR width.
Accumulator faults are replayed cycle by cycle because the corrupted value
feeds the next accumulation. Results are bit-equal to ``Accelerator.run``.
"""

import logging
from typing import Optional

import numpy as np

from src.fxp.arithmetic import convert_raw, mul_raw
from src.mitigate.masking import TECHNIQUES, mitigate_raw
from src.nn.activations import activate_raw
from src.nn.archive import WeightArchive
from src.nn.reference import accumulate, quantize_inputs
from src.nn.topology import DimensionError, activation_format

from .config import AcceleratorConfig, SimulationError
from .schedule import LayerSchedule, node_lanes, schedule_for
from .simulator import check_compatible, resolve_fault

logger = logging.getLogger(__name__)


class BatchEngine:
    """Evaluates one dataset under many faults on a fixed accelerator."""

    def __init__(
        self,
        config: AcceleratorConfig,
        archive: WeightArchive,
        inputs: np.ndarray,
        labels: Optional[np.ndarray] = None,
    ):
        check_compatible(config, archive)
        self.config = config
        self.archive = archive
        self.schedule = schedule_for(config)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)

        x = quantize_inputs(archive, inputs)
        if self.labels is not None and len(self.labels) != len(x):
            raise DimensionError(f"{len(x)} inputs but {len(self.labels)} labels")
        self._bias = []
        self._inputs, self._z, self._outputs = [], [], []
        for j in range(config.topology.num_matrices):
            fmts = config.formats[j]
            self._bias.append(convert_raw(archive.biases[j], fmts.wr, fmts.imr))
            z = accumulate(x, archive.weights[j], archive.biases[j], fmts)
            out = activate_raw(
                config.topology.activation, z, fmts.imr, activation_format(config.formats, j)
            )
            self._inputs.append(x)
            self._z.append(z)
            self._outputs.append(out)
            x = out
        logger.debug(f"BatchEngine ready: {len(self)} items on {config.num_pes} PEs")

    def __len__(self) -> int:
        return self._inputs[0].shape[0]

    @property
    def golden_outputs(self) -> np.ndarray:
        return self._outputs[-1]

    def outputs(self, fault=None, mitigation: str = "none") -> np.ndarray:
        """Raw output-layer activations (items, |L_last|) under ``fault``."""
        if mitigation not in TECHNIQUES:
            raise SimulationError(f"unknown mitigation {mitigation!r}; expected one of {TECHNIQUES}")
        fault = resolve_fault(fault, self.config)
        if fault is None:
            return self._outputs[-1]

        x = self._inputs[0]
        dirty = False
        for layer in self.schedule.layers:
            j = layer.index
            lo = max(fault.window[0], layer.start)
            hi = min(fault.window[1], layer.end)
            hit = lo < hi
            if not dirty and not hit:
                x = self._outputs[j]
                continue

            fmts = self.config.formats[j]
            z = self._z[j].copy()
            if dirty:
                rows = np.any(x != self._inputs[j], axis=1)
                if rows.any():
                    z[rows] = accumulate(x[rows], self.archive.weights[j], self.archive.biases[j], fmts)
            if hit:
                self._inject(layer, x, z, fault, lo - layer.start, hi - layer.start, mitigation)

            out = activate_raw(
                self.config.topology.activation, z, fmts.imr, activation_format(self.config.formats, j)
            )
            dirty = not np.array_equal(out, self._outputs[j])
            x = out if dirty else self._outputs[j]
        return x

    def predict(self, fault=None, mitigation: str = "none") -> np.ndarray:
        return np.argmax(self.outputs(fault, mitigation), axis=1)

    def error(self, fault=None, mitigation: str = "none") -> float:
        """Inference error in percent against the engine's labels."""
        if self.labels is None:
            raise SimulationError("BatchEngine was built without labels")
        if len(self.labels) == 0:
            raise SimulationError("cannot measure error on an empty dataset")
        return 100.0 * float(np.mean(self.predict(fault, mitigation) != self.labels))

    def _inject(self, layer: LayerSchedule, x, z, fault, c0: int, c1: int, mitigation: str) -> None:
        """Apply the fault over chunks [c0, c1) of ``layer``; updates ``z`` in place."""
        p_count = self.config.num_pes
        tree = 2 * p_count - 1
        register_class, index = fault.register_class, fault.index
        if register_class in ("IR", "WR"):
            self._operand(layer, x, z, fault, c0, c1, mitigation)
        elif index >= tree:
            self._accumulator(layer, x, z, fault, c0, c1, mitigation, index - tree)
        elif index >= p_count - 1:
            self._leaf(layer, x, z, fault, c0, c1, mitigation, index - (p_count - 1))
        else:
            self._internal(layer, x, z, fault, c0, c1, mitigation, index)
        z &= self.config.formats[layer.index].imr.mask

    def _products(self, layer: LayerSchedule, x, positions: np.ndarray) -> np.ndarray:
        fmts = self.config.formats[layer.index]
        n, i = np.divmod(positions, layer.inputs)
        w = self.archive.weights[layer.index][i, n]
        return mul_raw(x[:, i], fmts.ir, w, fmts.wr, fmts.imr)

    @staticmethod
    def _scatter(z, neurons: np.ndarray, delta: np.ndarray) -> None:
        np.add.at(z.T, neurons, delta.T)

    def _operand(self, layer, x, z, fault, c0, c1, mitigation) -> None:
        j = layer.index
        fmts = self.config.formats[j]
        positions = np.arange(c0, c1) * self.config.num_pes + fault.index
        positions = positions[positions < layer.products]
        if positions.size == 0:
            return
        n, i = np.divmod(positions, layer.inputs)
        xs = x[:, i]
        ws = self.archive.weights[j][i, n]
        if fault.register_class == "IR":
            corrupted, flipped = fault.apply_raw(xs)
            xs_new, ws_new = mitigate_raw(mitigation, corrupted, flipped, fmts.ir), ws
        else:
            corrupted, flipped = fault.apply_raw(ws)
            xs_new, ws_new = xs, mitigate_raw(mitigation, corrupted, flipped, fmts.wr)
        old = mul_raw(xs, fmts.ir, ws, fmts.wr, fmts.imr)
        new = mul_raw(xs_new, fmts.ir, ws_new, fmts.wr, fmts.imr)
        self._scatter(z, n, new - old)

    def _leaf(self, layer, x, z, fault, c0, c1, mitigation, lane: int) -> None:
        imr = self.config.formats[layer.index].imr
        positions = np.arange(c0, c1) * self.config.num_pes + lane
        real = positions < layer.products
        old = np.zeros((x.shape[0], positions.size), dtype=np.int64)
        if real.any():
            old[:, real] = self._products(layer, x, positions[real])
        corrupted, flipped = fault.apply_raw(old)
        new = mitigate_raw(mitigation, corrupted, flipped, imr)
        tags = np.minimum(positions // layer.inputs, layer.outputs - 1)
        self._scatter(z, tags, new - old)

    def _internal(self, layer, x, z, fault, c0, c1, mitigation, node: int) -> None:
        imr = self.config.formats[layer.index].imr
        p_count = self.config.num_pes
        lo, hi = node_lanes(node, p_count)
        chunks = [c for c in range(c0, c1) if layer.tag(c * p_count + lo) == layer.tag(c * p_count + hi - 1)]
        if not chunks:
            return
        chunks = np.array(chunks, dtype=np.int64)
        positions = (chunks[:, None] * p_count + np.arange(lo, hi)[None, :]).ravel()
        segments = np.repeat(np.arange(chunks.size), hi - lo)
        real = positions < layer.products

        old = np.zeros((x.shape[0], chunks.size), dtype=np.int64)
        if real.any():
            np.add.at(old.T, segments[real], self._products(layer, x, positions[real]).T)
        old &= imr.mask
        corrupted, flipped = fault.apply_raw(old)
        new = mitigate_raw(mitigation, corrupted, flipped, imr)
        tags = np.minimum((chunks * p_count + lo) // layer.inputs, layer.outputs - 1)
        self._scatter(z, tags, new - old)

    def _accumulator(self, layer, x, z, fault, c0, c1, mitigation, neuron: int) -> None:
        if neuron >= layer.outputs:
            return
        j = layer.index
        fmts = self.config.formats[j]
        p_count = self.config.num_pes
        begin = neuron * layer.inputs
        first = begin // p_count
        last = (begin + layer.inputs - 1) // p_count
        if last < c0 or first >= c1:
            return

        acc = np.full(x.shape[0], self._bias[j][neuron], dtype=np.int64)
        column = self.archive.weights[j][:, neuron]
        for c in range(first, last + 1):
            i0 = max(c * p_count, begin) - begin
            i1 = min((c + 1) * p_count, begin + layer.inputs) - begin
            products = mul_raw(x[:, i0:i1], fmts.ir, column[i0:i1], fmts.wr, fmts.imr)
            acc = (acc + products.sum(axis=1)) & fmts.imr.mask
            if c0 <= c < c1:
                corrupted, flipped = fault.apply_raw(acc)
                acc = mitigate_raw(mitigation, corrupted, flipped, fmts.imr)
        z[:, neuron] = acc
