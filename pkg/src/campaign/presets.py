"""
Preset experiment grids: one baseline configuration varied along one axis.
"""

import logging
from dataclasses import replace
from typing import List, Optional, Sequence

from src.accel.config import FAULT_KINDS
from src.faults.generator import scope_bits
from src.fxp.format import COMPONENTS
from src.nn.topology import ACTIVATIONS, REGISTER_CLASSES, LayerFormats

from .config import CampaignConfig, CampaignError

logger = logging.getLogger(__name__)

AXES = ("fault-kind", "nn-data", "nn-layer", "activation", "fp-component", "pe-count", "dataset")

# the fp-component axis sweeps the three fields of the word
FP_COMPONENTS = tuple(c for c in COMPONENTS if c != "non-sign")


class UnknownAxisError(CampaignError):
    """Raised for a preset axis that does not exist."""
    pass


def _archive_for(base: CampaignConfig, suffix: str) -> Optional[str]:
    return f"{base.archive}_{suffix}" if base.archive else None


def component_width(formats: Sequence[LayerFormats], component: str, register_class: Optional[str], layer: Optional[int]) -> int:
    """Most bits of a component a filter can hit in one register, over the layers in scope."""
    classes = [register_class] if register_class else list(REGISTER_CLASSES)
    return max(len(scope_bits(formats, c, component, layer)) for c in classes)


def preset_experiments(
    axis: str,
    base: CampaignConfig,
    formats: Optional[Sequence[LayerFormats]] = None,
) -> List[CampaignConfig]:
    """
    Expand ``base`` along one axis, everything else fixed.

    Args:
        axis: one of AXES
        base: baseline campaign
        formats: the baseline archive formats; bounds fp-component sweeps to
            the component width

    Returns:
        One CampaignConfig per axis value, named ``<base>_<value>``
    """
    f = base.fault_filter

    def named(suffix: str, **changes) -> CampaignConfig:
        return replace(base, name=f"{base.name}_{suffix}", **changes)

    if axis == "fault-kind":
        configs = [named(kind, fault_kind=kind) for kind in FAULT_KINDS]
    elif axis == "nn-data":
        configs = [named(c, fault_filter=replace(f, register_class=c)) for c in REGISTER_CLASSES]
    elif axis == "nn-layer":
        layers = len(base.training.hidden) + 1 if formats is None else len(formats)
        configs = [named(f"layer{j}", fault_filter=replace(f, layer=j)) for j in range(layers)]
    elif axis == "activation":
        configs = [
            named(act, training=replace(base.training, activation=act), archive=_archive_for(base, act))
            for act in ACTIVATIONS
        ]
    elif axis == "fp-component":
        configs = []
        for component in FP_COMPONENTS:
            counts = base.counts
            if formats is not None:
                width = component_width(formats, component, f.register_class, f.layer)
                counts = tuple(k for k in base.counts if k <= width)
            if not counts:
                logger.warning(f"Skipping fp-component {component}: no sweep count fits")
                continue
            configs.append(named(component, fault_filter=replace(f, component=component), counts=counts))
    elif axis == "pe-count":
        configs = [named(f"pe{p}", num_pes=p) for p in base.pe_counts]
    elif axis == "dataset":
        configs = [
            named(ds, dataset=replace(base.dataset, source=ds), archive=_archive_for(base, ds))
            for ds in base.datasets
        ]
    else:
        raise UnknownAxisError(f"unknown preset axis {axis!r}; expected one of {AXES}")

    logger.info(f"Preset {axis}: {len(configs)} campaigns ({', '.join(c.name for c in configs)})")
    return configs
