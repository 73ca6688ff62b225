"""
Cycle-accurate model of the streaming fixed-point accelerator.
"""

from .config import (
    FAULT_KINDS,
    AcceleratorConfig,
    InvalidFaultTargetError,
    SimulationError,
    cycles_for_inference,
    fault_space_size,
    layer_window,
    total_fault_bits,
)
from .schedule import CycleSchedule, schedule_for
from .simulator import Accelerator, RegisterTrace, run_inference, simulate_dataset
from .batch import BatchEngine

__all__ = [
    "FAULT_KINDS",
    "Accelerator",
    "AcceleratorConfig",
    "BatchEngine",
    "CycleSchedule",
    "InvalidFaultTargetError",
    "RegisterTrace",
    "SimulationError",
    "cycles_for_inference",
    "fault_space_size",
    "layer_window",
    "run_inference",
    "schedule_for",
    "simulate_dataset",
    "total_fault_bits",
]
