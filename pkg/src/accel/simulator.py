"""
Cycle-accurate simulation of one inference through the accelerator.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import polars as pl

from src.fxp import FixedPointFormat
from src.fxp.arithmetic import add_raw, convert_raw, mul_raw, quantize_raw
from src.mitigate.masking import TECHNIQUES, mitigate_raw
from src.nn.activations import activate_raw
from src.nn.archive import WeightArchive
from src.nn.topology import DimensionError, activation_format

from .config import AcceleratorConfig, SimulationError
from .schedule import leaf_index, schedule_for

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "cycle", "layer", "register_class", "register_index", "raw", "sign_bits", "fraction_bits", "width", "raw_hex",
)


class RegisterTrace:
    """Every register write of one or more inferences, in write order."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._rows: List[tuple] = []

    def record(self, cycle: int, layer: int, register_class: str, index: int, raw: int, fmt: FixedPointFormat) -> None:
        if self.enabled:
            self._rows.append(
                (cycle, layer, register_class, index, int(raw), fmt.sign_bits, fmt.fraction_bits, fmt.width)
            )

    def extend(self, other: "RegisterTrace") -> None:
        self._rows.extend(other._rows)

    def __len__(self) -> int:
        return len(self._rows)

    def frame(self) -> pl.DataFrame:
        columns = list(zip(*self._rows)) if self._rows else [[] for _ in range(8)]
        frame = pl.DataFrame(
            {
                "cycle": pl.Series(columns[0], dtype=pl.Int64),
                "layer": pl.Series(columns[1], dtype=pl.Int64),
                "register_class": pl.Series(columns[2], dtype=pl.Utf8),
                "register_index": pl.Series(columns[3], dtype=pl.Int64),
                "raw": pl.Series(columns[4], dtype=pl.Int64),
                "sign_bits": pl.Series(columns[5], dtype=pl.Int64),
                "fraction_bits": pl.Series(columns[6], dtype=pl.Int64),
                "width": pl.Series(columns[7], dtype=pl.Int64),
            }
        )
        hexes = [f"0x{raw:0{(width + 3) // 4}x}" for raw, width in zip(columns[4], columns[7])]
        return frame.with_columns(pl.Series("raw_hex", hexes, dtype=pl.Utf8))

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame().write_csv(path)
        logger.info(f"Wrote {len(self)} register writes to {path}")
        return path


@dataclass
class InferenceRun:
    """Outcome of one simulated inference."""

    predicted: int
    # raw activations per layer, quantized inputs first
    layers: List[List[int]]
    trace: RegisterTrace = field(default_factory=lambda: RegisterTrace(enabled=False))

    @property
    def outputs(self) -> List[int]:
        return self.layers[-1]


def check_compatible(config: AcceleratorConfig, archive: WeightArchive) -> None:
    if archive.topology.layer_sizes != config.topology.layer_sizes:
        raise DimensionError(f"archive topology {archive.topology} does not match accelerator {config.topology}")
    if tuple(archive.formats) != tuple(config.formats):
        raise SimulationError("archive formats differ from the accelerator's register formats")


def resolve_fault(fault, config: AcceleratorConfig):
    """Accept an ActiveFault as is, or activate a FaultSpec for ``config``."""
    if fault is None or hasattr(fault, "window"):
        return fault
    from src.faults.injector import activate

    return activate(fault, config)


class Accelerator:
    """
    Register-transfer model of the datapath.

    Each cycle latches operands into IR/WR, multiplies into the IMR leaves,
    sums pure subtrees through the internal IMRs and adds the routed partial
    sums into per-neuron accumulators. The fault hook runs after every
    register write, followed by mitigation of the bits it flipped.
    """

    def __init__(
        self,
        config: AcceleratorConfig,
        archive: WeightArchive,
        fault=None,
        mitigation: str = "none",
        record_trace: bool = False,
    ):
        check_compatible(config, archive)
        if mitigation not in TECHNIQUES:
            raise SimulationError(f"unknown mitigation {mitigation!r}; expected one of {TECHNIQUES}")
        self.config = config
        self.archive = archive
        self.schedule = schedule_for(config)
        self.fault = resolve_fault(fault, config)
        self.mitigation = mitigation
        self.record_trace = record_trace
        self._weights = [w.tolist() for w in archive.weights]
        self._biases = [
            convert_raw(b, f.wr, f.imr).tolist() for b, f in zip(archive.biases, archive.formats)
        ]

    def _write(self, trace: RegisterTrace, cycle: int, layer: int, register_class: str, index: int, raw: int, fmt: FixedPointFormat) -> int:
        fault = self.fault
        if fault is not None and fault.targets(register_class, index) and fault.active(cycle):
            corrupted, flipped = fault.apply_raw(raw)
            raw = mitigate_raw(self.mitigation, corrupted, flipped, fmt)
        trace.record(cycle, layer, register_class, index, raw, fmt)
        return raw

    def run(self, inputs) -> InferenceRun:
        vector = np.asarray(inputs, dtype=np.float64)
        if vector.shape != (self.config.topology.input_size,):
            raise DimensionError(
                f"expected {self.config.topology.input_size} inputs, got shape {vector.shape}"
            )
        trace = RegisterTrace(enabled=self.record_trace)
        x = [int(v) for v in quantize_raw(vector, self.archive.input_format)]
        layers = [x]
        for layer in self.schedule.layers:
            x = self._run_layer(layer, x, trace)
            layers.append(x)
        predicted = int(np.argmax(x))
        return InferenceRun(predicted, layers, trace)

    def _run_layer(self, layer, x: List[int], trace: RegisterTrace) -> List[int]:
        j = layer.index
        fmts = self.config.formats[j]
        ir, wr, imr = fmts.ir, fmts.wr, fmts.imr
        out_fmt = activation_format(self.config.formats, j)
        activation = self.config.topology.activation
        weights, biases = self._weights[j], self._biases[j]
        p_count = self.config.num_pes

        first = [layer.first_cycle(n, p_count) for n in range(layer.outputs)]
        last = [layer.last_cycle(n, p_count) for n in range(layer.outputs)]
        acc = [0] * layer.outputs
        outputs = [0] * layer.outputs

        for cycle in range(layer.start, layer.end):
            plan = self.schedule.plan(cycle)
            tree = [0] * (2 * p_count - 1)
            for lane, i, n in plan.lanes:
                xv = self._write(trace, cycle, j, "IR", lane, x[i], ir)
                wv = self._write(trace, cycle, j, "WR", lane, weights[i][n], wr)
                tree[leaf_index(lane, p_count)] = int(mul_raw(xv, ir, wv, wr, imr))
            for lane in range(p_count):
                h = leaf_index(lane, p_count)
                tree[h] = self._write(trace, cycle, j, "IMR", h, tree[h], imr)
            for h in plan.internal_nodes:
                tree[h] = self._write(trace, cycle, j, "IMR", h, add_raw(tree[2 * h + 1], tree[2 * h + 2], imr), imr)

            routed = defaultdict(int)
            for h, n in plan.routes:
                routed[n] += tree[h]
            for n in plan.neurons:
                base = biases[n] if cycle == first[n] else acc[n]
                index = self.config.accumulator_index(n)
                acc[n] = self._write(trace, cycle, j, "IMR", index, add_raw(base, routed[n], imr), imr)
                if cycle == last[n]:
                    outputs[n] = int(activate_raw(activation, acc[n], imr, out_fmt))

        return outputs


def run_inference(
    config: AcceleratorConfig,
    archive: WeightArchive,
    inputs,
    fault=None,
    mitigation: str = "none",
    trace: bool = False,
) -> Tuple[int, RegisterTrace]:
    """
    Simulate one item cycle by cycle.

    Args:
        config: accelerator geometry and register formats
        archive: quantized parameters matching ``config``
        inputs: real input vector of length |L_0|
        fault: optional FaultSpec or ActiveFault
        mitigation: none, word, bit or hybrid
        trace: record every register write

    Returns:
        (class index, RegisterTrace); argmax ties go to the lowest index
    """
    run = Accelerator(config, archive, fault, mitigation, trace).run(inputs)
    return run.predicted, run.trace


def simulate_dataset(
    config: AcceleratorConfig,
    archive: WeightArchive,
    inputs: np.ndarray,
    fault=None,
    mitigation: str = "none",
    trace: bool = False,
) -> Tuple[np.ndarray, RegisterTrace]:
    """Run every row of ``inputs`` through one Accelerator; traces are concatenated."""
    accelerator = Accelerator(config, archive, fault, mitigation, trace)
    combined = RegisterTrace(enabled=trace)
    predictions = []
    for row in np.atleast_2d(inputs):
        run = accelerator.run(row)
        predictions.append(run.predicted)
        combined.extend(run.trace)
    return np.array(predictions, dtype=np.int64), combined
