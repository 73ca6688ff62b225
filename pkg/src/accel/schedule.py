"""
Canonical cycle schedule and segmented adder-tree geometry.

Products of Layer_j are flattened output-neuron-major, input-minor
(position k = n * |L_j| + i) and packed P per cycle; the final chunk of a
layer may be partial and its idle lanes carry zeros. Chunks never span layers.

The adder tree is stored in heap order: node 0 is the root, node P-1+p is the
leaf fed by lane p and node h has children 2h+1 and 2h+2. A node is written
in a cycle only when every lane below it works on the same neuron; the
highest such nodes feed that neuron's accumulator.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

from .config import AcceleratorConfig


def node_level(h: int) -> int:
    return (h + 1).bit_length() - 1


def node_lanes(h: int, num_pes: int) -> Tuple[int, int]:
    """Lanes [lo, hi) summed by tree node ``h``."""
    level = node_level(h)
    span = num_pes >> level
    lo = (h - ((1 << level) - 1)) * span
    return lo, lo + span


def leaf_index(lane: int, num_pes: int) -> int:
    return num_pes - 1 + lane


def parent(h: int) -> int:
    return (h - 1) // 2


@dataclass(frozen=True)
class ChunkPlan:
    """What the datapath does in one cycle."""

    cycle: int
    layer: int
    # (lane, input index, neuron) of every busy lane
    lanes: Tuple[Tuple[int, int, int], ...]
    # neuron carried by each lane; idle lanes take the chunk's last neuron
    tags: Tuple[int, ...]
    # internal tree nodes written this cycle, deepest first
    internal_nodes: Tuple[int, ...]
    # (node, neuron) pairs routed into accumulators
    routes: Tuple[Tuple[int, int], ...]
    # neurons whose accumulator is written this cycle, ascending
    neurons: Tuple[int, ...]


@dataclass(frozen=True)
class LayerSchedule:
    index: int
    start: int
    end: int
    inputs: int
    outputs: int

    @property
    def cycles(self) -> int:
        return self.end - self.start

    @property
    def products(self) -> int:
        return self.inputs * self.outputs

    def first_cycle(self, neuron: int, num_pes: int) -> int:
        return self.start + (neuron * self.inputs) // num_pes

    def last_cycle(self, neuron: int, num_pes: int) -> int:
        return self.start + (neuron * self.inputs + self.inputs - 1) // num_pes

    def tag(self, position: int) -> int:
        return min(position // self.inputs, self.outputs - 1)


class CycleSchedule:
    """Per-layer cycle windows and the per-cycle datapath plans."""

    def __init__(self, config: AcceleratorConfig):
        self.config = config
        self.num_pes = config.num_pes
        self.layers: List[LayerSchedule] = []
        for j in range(config.topology.num_matrices):
            start, end = config.layer_window(j)
            rows, cols = config.topology.matrix_shape(j)
            self.layers.append(LayerSchedule(j, start, end, rows, cols))
        self.total_cycles = self.layers[-1].end
        self._plans: Dict[int, ChunkPlan] = {}

    def layer_at(self, cycle: int) -> LayerSchedule:
        for layer in self.layers:
            if layer.start <= cycle < layer.end:
                return layer
        raise IndexError(f"cycle {cycle} outside [0, {self.total_cycles})")

    def is_pure(self, layer: LayerSchedule, chunk: int, h: int) -> bool:
        lo, hi = node_lanes(h, self.num_pes)
        base = chunk * self.num_pes
        return layer.tag(base + lo) == layer.tag(base + hi - 1)

    def plan(self, cycle: int) -> ChunkPlan:
        if cycle not in self._plans:
            self._plans[cycle] = self._build_plan(cycle)
        return self._plans[cycle]

    def _build_plan(self, cycle: int) -> ChunkPlan:
        layer = self.layer_at(cycle)
        p_count = self.num_pes
        chunk = cycle - layer.start
        base = chunk * p_count

        lanes = []
        for p in range(p_count):
            k = base + p
            if k < layer.products:
                n, i = divmod(k, layer.inputs)
                lanes.append((p, i, n))
        tags = tuple(layer.tag(base + p) for p in range(p_count))

        pure = [self.is_pure(layer, chunk, h) for h in range(2 * p_count - 1)]
        internal = tuple(h for h in range(p_count - 2, -1, -1) if pure[h])
        routes = tuple(
            (h, tags[node_lanes(h, p_count)[0]])
            for h in range(2 * p_count - 1)
            if pure[h] and (h == 0 or not pure[parent(h)])
        )
        neurons = tuple(sorted(set(tags)))
        return ChunkPlan(cycle, layer.index, tuple(lanes), tags, internal, routes, neurons)


@lru_cache(maxsize=32)
def schedule_for(config: AcceleratorConfig) -> CycleSchedule:
    return CycleSchedule(config)
