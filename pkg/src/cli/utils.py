"""
Logging setup and argument types shared by the subcommands.
"""

import argparse
import logging
import sys

TOOL_VERSION = "0.1.0"

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

LOG_FORMAT = "%(asctime)s %(levelname)-7s [%(name)s] %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """
    Send log records to stderr at ``level``, timestamped to the second.
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(
        level=numeric_level,
        format=LOG_FORMAT,
        datefmt="%H:%M:%S",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def pe_count(text: str) -> int:
    """argparse type for ``--pes``: a positive power of two."""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"PE count must be an integer, got {text!r}")
    if value < 1 or value & (value - 1):
        raise argparse.ArgumentTypeError(f"PE count must be a positive power of two, got {value}")
    return value
