"""
Fault-injection campaigns: configuration, presets and median-aggregated sweeps.
"""

from .config import CampaignConfig, CampaignError, ConfigError, TrainingConfig, config_from_dict, config_hash, load_config
from .presets import AXES, UnknownAxisError, preset_experiments
from .workspace import Workspace, prepare_campaign, resolve_archive_path, train_archive
from .runner import (
    CampaignResult,
    ConvergenceReport,
    SweepPoint,
    compare_mitigations,
    convergence_report,
    run_campaign,
    run_trial,
)

__all__ = [
    "AXES",
    "CampaignConfig",
    "CampaignError",
    "CampaignResult",
    "ConfigError",
    "ConvergenceReport",
    "SweepPoint",
    "TrainingConfig",
    "UnknownAxisError",
    "Workspace",
    "compare_mitigations",
    "config_from_dict",
    "config_hash",
    "convergence_report",
    "load_config",
    "prepare_campaign",
    "preset_experiments",
    "resolve_archive_path",
    "run_campaign",
    "run_trial",
    "train_archive",
]
