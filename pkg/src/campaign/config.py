"""
Declarative campaign configuration (JSON) and its hash.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from src.accel.config import FAULT_KINDS
from src.faults.spec import FaultError, FaultFilter
from src.mitigate.masking import TECHNIQUES
from src.nn.datasets import DatasetError, DatasetSpec
from src.nn.topology import ACTIVATIONS, REGISTER_CLASSES

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {
    "name", "seed", "dataset", "training", "formats", "accelerator", "archive",
    "fault", "sweep", "trials", "mitigation", "presets", "calibration",
}


class CampaignError(Exception):
    """Base exception for campaign definition and execution errors."""
    pass


class ConfigError(CampaignError):
    """Raised when a configuration file violates the schema."""
    pass


@dataclass(frozen=True)
class TrainingConfig:
    hidden: Tuple[int, ...] = (32,)
    activation: str = "logsig"
    epochs: int = 200
    learning_rate: float = 0.5
    batch_size: int = 32
    seed: int = 0
    weight_decay: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden layer sizes must be >= 1, got {self.hidden}")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0 or self.weight_decay < 0:
            raise ConfigError(
                "training needs epochs >= 0, batch_size >= 1, learning_rate > 0 and weight_decay >= 0"
            )


@dataclass(frozen=True)
class CampaignConfig:
    """
    One fault-injection experiment: a fault model swept over fault counts,
    each point evaluated over ``trials`` random faults.
    """

    name: str = "campaign"
    seed: int = 0
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    widths: Dict[str, int] = field(default_factory=lambda: {c: 16 for c in REGISTER_CLASSES})
    num_pes: int = 16
    wr_headroom: int = 0
    archive: Optional[str] = None
    fault_kind: str = "stuck_at_1"
    fault_filter: FaultFilter = field(default_factory=FaultFilter)
    counts: Tuple[int, ...] = tuple(range(17))
    trials: int = 1000
    mitigation: str = "none"
    pe_counts: Tuple[int, ...] = (16, 64, 256)
    datasets: Tuple[str, ...] = ("digits", "blobs", "iris", "wine")

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(k) for k in self.counts))
        object.__setattr__(self, "pe_counts", tuple(int(p) for p in self.pe_counts))
        object.__setattr__(self, "datasets", tuple(self.datasets))
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for p in (self.num_pes, *self.pe_counts):
            if p < 1 or p & (p - 1):
                raise ConfigError(f"PE counts must be positive powers of two, got {p}")
        if not self.counts or any(k < 0 for k in self.counts):
            raise ConfigError(f"sweep counts must be a nonempty list of values >= 0, got {self.counts}")
        if self.fault_kind not in FAULT_KINDS:
            raise ConfigError(f"unknown fault kind {self.fault_kind!r}; expected one of {FAULT_KINDS}")
        if self.mitigation not in TECHNIQUES:
            raise ConfigError(f"unknown mitigation {self.mitigation!r}; expected one of {TECHNIQUES}")
        if set(self.widths) != set(REGISTER_CLASSES):
            raise ConfigError(f"formats must give a width for each of {REGISTER_CLASSES}")
        if self.wr_headroom < 0:
            raise ConfigError(f"calibration.wr_headroom must be >= 0, got {self.wr_headroom}")

    def replace(self, **changes) -> "CampaignConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """The configuration in file schema form."""
        fault = {"kind": self.fault_kind, "include_accumulators": self.fault_filter.include_accumulators}
        for key, value in (
            ("register_class", self.fault_filter.register_class),
            ("layer", self.fault_filter.layer),
            ("component", self.fault_filter.component),
        ):
            if value is not None:
                fault[key] = value
        dataset = {k: v for k, v in asdict(self.dataset).items() if v is not None}
        training = asdict(self.training)
        training["hidden"] = list(self.training.hidden)
        return {
            "name": self.name,
            "seed": self.seed,
            "dataset": dataset,
            "training": training,
            "formats": dict(sorted(self.widths.items())),
            "calibration": {"wr_headroom": self.wr_headroom},
            "accelerator": {"num_pes": self.num_pes},
            "archive": self.archive,
            "fault": fault,
            "sweep": {"counts": list(self.counts)},
            "trials": self.trials,
            "mitigation": self.mitigation,
            "presets": {"pe_counts": list(self.pe_counts), "datasets": list(self.datasets)},
        }


def config_hash(config: CampaignConfig) -> str:
    """Stable short digest of a configuration."""
    text = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _sweep_counts(sweep: Dict[str, Any]) -> Tuple[int, ...]:
    if isinstance(sweep.get("counts"), dict):
        sweep = sweep["counts"]
    elif "counts" in sweep:
        return tuple(sweep["counts"])
    if "start" in sweep and "stop" in sweep:
        return tuple(range(int(sweep["start"]), int(sweep["stop"]) + 1))
    raise ConfigError("sweep needs 'counts' or 'start'/'stop'")


def config_from_dict(data: Dict[str, Any]) -> CampaignConfig:
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        seed = int(data.get("seed", 0))
        dataset = dict(data.get("dataset", {}))
        dataset.setdefault("seed", seed)
        fault = dict(data.get("fault", {}))
        kind = fault.pop("kind", "stuck_at_1")
        defaults = CampaignConfig()
        return CampaignConfig(
            name=data.get("name", defaults.name),
            seed=seed,
            dataset=DatasetSpec(**dataset),
            training=TrainingConfig(**data.get("training", {})),
            widths={**defaults.widths, **data.get("formats", {})},
            num_pes=int(data.get("accelerator", {}).get("num_pes", defaults.num_pes)),
            wr_headroom=int(data.get("calibration", {}).get("wr_headroom", defaults.wr_headroom)),
            archive=data.get("archive"),
            fault_kind=kind,
            fault_filter=FaultFilter(**fault),
            counts=_sweep_counts(data.get("sweep", {"counts": list(defaults.counts)})),
            trials=int(data.get("trials", defaults.trials)),
            mitigation=data.get("mitigation", defaults.mitigation),
            pe_counts=tuple(data.get("presets", {}).get("pe_counts", defaults.pe_counts)),
            datasets=tuple(data.get("presets", {}).get("datasets", defaults.datasets)),
        )
    except ConfigError:
        raise
    except (DatasetError, FaultError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_config(path: Union[str, Path]) -> CampaignConfig:
    """Read and validate a JSON campaign configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    config = config_from_dict(data)
    logger.info(f"Loaded config {config.name!r} from {path} (hash {config_hash(config)})")
    return config
