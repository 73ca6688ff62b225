"""
Fault specifications, seeded generation and write-time application.
"""

from .spec import (
    FAULT_KINDS,
    FaultError,
    FaultFilter,
    FaultSpec,
    UnsatisfiableFilterError,
)
from .generator import eligible_registers, generate_fault
from .injector import ActiveFault, activate, apply

__all__ = [
    "FAULT_KINDS",
    "ActiveFault",
    "FaultError",
    "FaultFilter",
    "FaultSpec",
    "UnsatisfiableFilterError",
    "activate",
    "apply",
    "eligible_registers",
    "generate_fault",
]
