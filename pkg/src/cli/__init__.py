"""
Command-line entry point: train, infer, campaign, mitigate-eval and analyze.
"""

from .main import build_parser, main
from .storage import ensure_directory, write_json, write_run_manifest
from .utils import TOOL_VERSION, setup_logging

__all__ = [
    "TOOL_VERSION",
    "build_parser",
    "ensure_directory",
    "main",
    "setup_logging",
    "write_json",
    "write_run_manifest",
]
