"""
Fault specifications and the filters that constrain their generation.
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from src.accel.config import FAULT_KINDS
from src.fxp.format import COMPONENTS
from src.nn.topology import REGISTER_CLASSES

WHOLE_INFERENCE = "whole_inference"


class FaultError(Exception):
    """Base exception for fault specification and generation errors."""
    pass


class UnsatisfiableFilterError(FaultError):
    """Raised when no register satisfies a fault filter."""
    pass


@dataclass(frozen=True)
class FaultSpec:
    """
    One fault confined to a single register.

    ``layer`` is None for faults scoped to the whole inference, otherwise the
    Layer_j whose cycle window bounds the fault. Transient faults carry the
    single cycle they strike; permanent faults carry none.
    """

    kind: str
    register_class: str
    index: int
    bits: Tuple[int, ...]
    layer: Optional[int] = None
    cycle: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(sorted(set(int(b) for b in self.bits))))
        if self.kind not in FAULT_KINDS:
            raise FaultError(f"unknown fault kind {self.kind!r}; expected one of {FAULT_KINDS}")
        if self.register_class not in REGISTER_CLASSES:
            raise FaultError(f"unknown register class {self.register_class!r}")
        if self.index < 0:
            raise FaultError(f"register index must be >= 0, got {self.index}")
        if not self.bits or self.bits[0] < 0:
            raise FaultError(f"bits must be a nonempty set of indices >= 0, got {self.bits}")
        if self.layer is not None and self.layer < 0:
            raise FaultError(f"layer must be >= 0, got {self.layer}")
        if self.is_transient and self.cycle is None:
            raise FaultError("transient faults need a cycle")
        if not self.is_transient and self.cycle is not None:
            raise FaultError("permanent faults have no cycle")

    @property
    def is_transient(self) -> bool:
        return self.kind == "transient"

    @property
    def mask(self) -> int:
        return sum(1 << b for b in self.bits)

    @property
    def scope(self) -> str:
        return WHOLE_INFERENCE if self.layer is None else f"layer_{self.layer}"

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "kind": self.kind,
            "class": self.register_class,
            "index": self.index,
            "bits": list(self.bits),
            "scope": self.scope,
        }
        if self.cycle is not None:
            data["cycle"] = self.cycle
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FaultSpec":
        try:
            scope = data.get("scope", WHOLE_INFERENCE)
            if scope == WHOLE_INFERENCE:
                layer = None
            elif scope.startswith("layer_"):
                layer = int(scope[len("layer_"):])
            else:
                raise FaultError(f"unknown fault scope {scope!r}")
            return cls(
                kind=data["kind"],
                register_class=data["class"],
                index=int(data["index"]),
                bits=tuple(data["bits"]),
                layer=layer,
                cycle=data.get("cycle"),
            )
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise FaultError(f"Malformed fault record {data!r}: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FaultSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FaultFilter:
    """
    Constraints on generated faults. Unset fields leave that choice free.

    ``include_accumulators`` extends the IMR class with the per-neuron
    accumulators.
    """

    register_class: Optional[str] = None
    layer: Optional[int] = None
    component: Optional[str] = None
    count: int = 1
    include_accumulators: bool = False

    def __post_init__(self):
        if self.register_class is not None and self.register_class not in REGISTER_CLASSES:
            raise FaultError(f"unknown register class {self.register_class!r}")
        if self.component is not None and self.component not in COMPONENTS:
            raise FaultError(f"unknown component {self.component!r}; expected one of {COMPONENTS}")
        if self.count < 1:
            raise FaultError(f"fault count must be >= 1, got {self.count}")
        if self.layer is not None and self.layer < 0:
            raise FaultError(f"layer must be >= 0, got {self.layer}")

    def with_count(self, count: int) -> "FaultFilter":
        return FaultFilter(
            self.register_class, self.layer, self.component, count, self.include_accumulators
        )
