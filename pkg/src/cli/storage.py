"""
Storage utilities for run outputs.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from src.campaign.config import CampaignConfig, config_hash

from .utils import TOOL_VERSION

logger = logging.getLogger(__name__)

RUN_MANIFEST = "run_manifest.json"


def ensure_directory(path: Union[str, Path]) -> Path:
    """Create an output directory and its parents; an existing file in the way is an error."""
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise NotADirectoryError(f"Output path {path} exists and is not a directory")
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Write ``data`` as sorted, indented JSON (stable across reruns)."""
    path = Path(path)
    ensure_directory(path.parent)
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    except Exception as e:
        logger.error(f"Failed to save {path}: {e}")
        raise
    logger.info(f"Saved: {path}")
    return path


def write_run_manifest(
    output_dir: Union[str, Path],
    command: str,
    config: CampaignConfig,
    config_path: Optional[str],
) -> Path:
    """
    Record what produced an output directory.

    File: {output_dir}/run_manifest.json
    """
    manifest = {
        "command": command,
        "config": config_path,
        "seed": config.seed,
        "out": str(output_dir),
        "config_hash": config_hash(config),
        "tool_version": TOOL_VERSION,
    }
    return write_json(manifest, Path(output_dir) / RUN_MANIFEST)
