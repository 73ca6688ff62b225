"""
Sweep and mitigation tables over campaign results.

Results are read by attribute (``points`` with ``count``/``median``/``mean``/
``std``/``trials``), so anything shaped like a CampaignResult works here.
"""

import logging
from pathlib import Path
from typing import Dict, Mapping, Union

import polars as pl

from .sparsity import AnalysisError

logger = logging.getLogger(__name__)

SWEEP_SCHEMA = {
    "k": pl.Int64,
    "median": pl.Float64,
    "mean": pl.Float64,
    "stddev": pl.Float64,
    "trials": pl.Int64,
}


def sweep_table(result) -> pl.DataFrame:
    """One row per fault count, ascending k."""
    rows = [
        {"k": p.count, "median": p.median, "mean": p.mean, "stddev": p.std, "trials": p.trials}
        for p in result.points
    ]
    return pl.DataFrame(rows, schema=SWEEP_SCHEMA).sort("k")


def write_sweep_table(result, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_table(result).write_csv(path)
    return path


def read_sweep_table(path: Union[str, Path]) -> pl.DataFrame:
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"Sweep table not found: {path}")
    frame = pl.read_csv(path, schema=SWEEP_SCHEMA)
    return frame.sort("k")


def improvement(hybrid: float, other: float) -> float:
    """Relative reduction (%) of the hybrid error against another technique."""
    if other == 0:
        return 0.0
    return (other - hybrid) / other * 100.0


def mitigation_table(results: Mapping[str, object]) -> pl.DataFrame:
    """
    Per-k median error of each technique side by side.

    Args:
        results: campaign results keyed by technique name

    Returns:
        Frame with column ``k``, one ``median_<technique>`` column per
        technique, and ``hybrid_vs_bit`` / ``hybrid_vs_word`` improvements (%)
        when those techniques are present
    """
    if not results:
        raise AnalysisError("mitigation table needs at least one result")

    medians: Dict[str, Dict[int, float]] = {
        technique: {p.count: p.median for p in result.points} for technique, result in results.items()
    }
    counts = sorted(set.intersection(*(set(m) for m in medians.values())))
    if not counts:
        raise AnalysisError("results share no fault count")

    columns: Dict[str, list] = {"k": counts}
    for technique, by_count in medians.items():
        columns[f"median_{technique}"] = [by_count[k] for k in counts]
    if "hybrid" in medians:
        for other in ("bit", "word"):
            if other in medians:
                columns[f"hybrid_vs_{other}"] = [
                    improvement(medians["hybrid"][k], medians[other][k]) for k in counts
                ]

    table = pl.DataFrame(columns)
    logger.info(f"Mitigation table: {len(counts)} fault counts, techniques {list(medians)}")
    return table
