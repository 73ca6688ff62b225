"""
Seeded random fault generation.

Each trial owns a generator seeded from (master seed, trial index). Draws are
made in a fixed order: register, a permutation of its allowed bits, then the
cycle. The first k entries of the permutation are the fault's bits, so for a
given trial the register, the cycle and the bit sets are shared across fault
counts and kinds, and the bit set for k is a subset of the one for k+1.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.accel.config import AcceleratorConfig
from src.nn.topology import REGISTER_CLASSES, LayerFormats

from .spec import FAULT_KINDS, FaultError, FaultFilter, FaultSpec, UnsatisfiableFilterError

logger = logging.getLogger(__name__)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def scope_bits(
    formats: Sequence[LayerFormats],
    register_class: str,
    component: Optional[str] = None,
    layer: Optional[int] = None,
) -> Tuple[int, ...]:
    """
    Bit positions of one register class that fall inside ``component`` at
    every layer in scope.

    A register keeps its faulty bits for the whole scope, so when the layers
    give the class different formats only the positions the field shares
    across them qualify.
    """
    layers = range(len(formats)) if layer is None else [layer]
    fmts = [formats[j].for_class(register_class) for j in layers]
    if component is None:
        return tuple(range(min(fmt.width for fmt in fmts)))
    common = set(fmts[0].component_bits(component))
    for fmt in fmts[1:]:
        common &= set(fmt.component_bits(component))
    return tuple(sorted(common))


def allowed_bits(register_class: str, fault_filter: FaultFilter, config: AcceleratorConfig) -> Tuple[int, ...]:
    """Bit positions a filter permits in one register class."""
    return scope_bits(config.formats, register_class, fault_filter.component, fault_filter.layer)


def eligible_registers(
    fault_filter: FaultFilter, config: AcceleratorConfig
) -> List[Tuple[str, int, Tuple[int, ...]]]:
    """(class, index, allowed bits) of every register that can host the fault."""
    if fault_filter.layer is not None and fault_filter.layer >= config.topology.num_matrices:
        raise UnsatisfiableFilterError(
            f"layer {fault_filter.layer} outside [0, {config.topology.num_matrices})"
        )
    classes = [fault_filter.register_class] if fault_filter.register_class else list(REGISTER_CLASSES)
    registers = []
    for register_class in classes:
        bits = allowed_bits(register_class, fault_filter, config)
        if len(bits) < fault_filter.count:
            continue
        count = config.register_count(register_class, fault_filter.include_accumulators)
        registers.extend((register_class, index, bits) for index in range(count))
    return registers


def generate_fault(
    seed: int,
    trial: int,
    fault_filter: FaultFilter,
    config: AcceleratorConfig,
    kind: str = "stuck_at_1",
) -> FaultSpec:
    """
    Draw one fault for a trial.

    Args:
        seed: master seed of the campaign
        trial: trial index
        fault_filter: register/layer/component constraints and bit count k
        config: accelerator whose register file is targeted
        kind: stuck_at_0, stuck_at_1 or transient

    Returns:
        The trial's FaultSpec; identical for identical arguments
    """
    if kind not in FAULT_KINDS:
        raise FaultError(f"unknown fault kind {kind!r}; expected one of {FAULT_KINDS}")
    registers = eligible_registers(fault_filter, config)
    if not registers:
        raise UnsatisfiableFilterError(
            f"no register offers {fault_filter.count} bits for "
            f"class={fault_filter.register_class} component={fault_filter.component}"
        )

    rng = trial_rng(seed, trial)
    register_class, index, bits = registers[int(rng.integers(len(registers)))]
    order = rng.permutation(len(bits))
    chosen = tuple(sorted(bits[i] for i in order[:fault_filter.count]))

    if fault_filter.layer is None:
        start, end = 0, config.cycles_for_inference()
    else:
        start, end = config.layer_window(fault_filter.layer)
    cycle = start + int(rng.integers(end - start))

    spec = FaultSpec(
        kind=kind,
        register_class=register_class,
        index=index,
        bits=chosen,
        layer=fault_filter.layer,
        cycle=cycle if kind == "transient" else None,
    )
    logger.debug(f"Trial {trial}: {spec.to_json()}")
    return spec
