"""
Trial execution and median aggregation of fault-injection campaigns.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import polars as pl
from joblib import Parallel, delayed
from tqdm import tqdm

from src.analysis.reports import write_sweep_table
from src.faults.generator import generate_fault
from src.mitigate.masking import TECHNIQUES

from .config import CampaignConfig, CampaignError, config_hash
from .workspace import Workspace

logger = logging.getLogger(__name__)

THREADS_ENV = "FAULTLINE_THREADS"
RESULT_VERSION = 1


def default_jobs() -> int:
    """Worker count from FAULTLINE_THREADS (default 1)."""
    value = os.environ.get(THREADS_ENV, "1")
    try:
        jobs = int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        return 1
    return max(jobs, 1)


def running_median(errors: Sequence[float]) -> List[float]:
    values = np.asarray(errors, dtype=np.float64)
    return [float(np.median(values[:m])) for m in range(1, len(values) + 1)]


@dataclass
class SweepPoint:
    """Per-trial errors (in trial order) at one fault count."""

    count: int
    errors: List[float]

    @property
    def trials(self) -> int:
        return len(self.errors)

    @property
    def median(self) -> float:
        return float(np.median(self.errors))

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std(self) -> float:
        return float(np.std(self.errors))

    @property
    def running_median(self) -> List[float]:
        return running_median(self.errors)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "median": self.median,
            "mean": self.mean,
            "std": self.std,
            "trials": self.trials,
            "errors": list(self.errors),
            "running_median": self.running_median,
        }


@dataclass
class ConvergenceReport:
    trials_to_converge: int
    final_median: float
    std: float
    margin: float


def convergence_report(errors: Union[SweepPoint, Sequence[float]], margin: float = 1.0) -> ConvergenceReport:
    """
    Smallest trial count after which the running median stays within
    ``margin`` percentage points of the final median.
    """
    if isinstance(errors, SweepPoint):
        errors = errors.errors
    if len(errors) < 2:
        raise CampaignError("convergence needs at least 2 trials")
    series = np.asarray(running_median(errors))
    final = series[-1]
    outside = np.nonzero(np.abs(series - final) > margin)[0]
    n = int(outside[-1]) + 2 if outside.size else 1
    return ConvergenceReport(n, float(final), float(np.std(errors)), margin)


@dataclass
class CampaignResult:
    name: str
    config_hash: str
    seed: int
    fault_kind: str
    mitigation: str
    num_pes: int
    fault_filter: Dict[str, Any]
    baseline_error: float
    points: List[SweepPoint] = field(default_factory=list)

    def point(self, count: int) -> SweepPoint:
        for p in self.points:
            if p.count == count:
                return p
        raise KeyError(f"no sweep point for k={count}")

    def medians(self) -> Dict[int, float]:
        return {p.count: p.median for p in self.points}

    def convergence(self, margin: float = 1.0) -> Dict[int, ConvergenceReport]:
        return {p.count: convergence_report(p, margin) for p in self.points if p.trials >= 2}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": RESULT_VERSION,
            "name": self.name,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "fault_kind": self.fault_kind,
            "mitigation": self.mitigation,
            "num_pes": self.num_pes,
            "fault_filter": self.fault_filter,
            "baseline_error": self.baseline_error,
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CampaignResult":
        try:
            points = [SweepPoint(int(p["count"]), [float(e) for e in p["errors"]]) for p in data["points"]]
            return cls(
                name=data["name"],
                config_hash=data["config_hash"],
                seed=int(data["seed"]),
                fault_kind=data["fault_kind"],
                mitigation=data["mitigation"],
                num_pes=int(data["num_pes"]),
                fault_filter=dict(data["fault_filter"]),
                baseline_error=float(data["baseline_error"]),
                points=points,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CampaignError(f"Malformed campaign result: {e}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CampaignResult":
        path = Path(path)
        if not path.exists():
            raise CampaignError(f"Result file not found: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    def convergence_frame(self) -> pl.DataFrame:
        rows = [
            {"count": p.count, "trial": t + 1, "running_median": m}
            for p in self.points
            for t, m in enumerate(p.running_median)
        ]
        schema = {"count": pl.Int64, "trial": pl.Int64, "running_median": pl.Float64}
        return pl.DataFrame(rows, schema=schema)

    def write(self, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """Write ``<name>.json``, ``<name>_sweep.csv`` and ``<name>_convergence.csv``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "json": out_dir / f"{self.name}.json",
            "sweep": out_dir / f"{self.name}_sweep.csv",
            "convergence": out_dir / f"{self.name}_convergence.csv",
        }
        paths["json"].write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        write_sweep_table(self, paths["sweep"])
        self.convergence_frame().write_csv(paths["convergence"])
        logger.info(f"Saved {self.name} results to {out_dir}")
        return paths


def run_trial(
    workspace: Workspace,
    campaign: CampaignConfig,
    trial: int,
    count: int,
    mitigation: Optional[str] = None,
) -> float:
    """
    Inference error (%) of the test split under one generated fault.

    k = 0 injects nothing and reproduces the fault-free baseline.
    """
    technique = campaign.mitigation if mitigation is None else mitigation
    if count == 0:
        return workspace.engine.error(None, technique)
    spec = generate_fault(
        campaign.seed,
        trial,
        campaign.fault_filter.with_count(count),
        workspace.accelerator,
        campaign.fault_kind,
    )
    return workspace.engine.error(spec, technique)


def _run_trials(workspace, campaign, trials: Sequence[int], count: int, mitigation: str) -> List[float]:
    return [run_trial(workspace, campaign, t, count, mitigation) for t in trials]


def _chunks(trials: int, jobs: int) -> List[range]:
    size = max(1, -(-trials // (jobs * 4)))
    return [range(s, min(s + size, trials)) for s in range(0, trials, size)]


def run_campaign(
    campaign: CampaignConfig,
    workspace: Workspace,
    n_jobs: Optional[int] = None,
    progress: bool = True,
    mitigation: Optional[str] = None,
) -> CampaignResult:
    """
    Run every (fault count, trial) pair and aggregate per fault count.

    Trials are independent and seeded from (seed, trial), so results do not
    depend on ``n_jobs`` or on execution order.
    """
    technique = campaign.mitigation if mitigation is None else mitigation
    jobs = default_jobs() if n_jobs is None else max(1, n_jobs)
    chunks = _chunks(campaign.trials, jobs)
    baseline = workspace.baseline_error

    logger.info(
        f"Campaign {campaign.name}: {campaign.fault_kind}, mitigation={technique}, "
        f"k={list(campaign.counts)}, {campaign.trials} trials, {jobs} jobs"
    )
    points = []
    bar = tqdm(total=len(campaign.counts) * len(chunks), desc=campaign.name, disable=not progress)
    with Parallel(n_jobs=jobs, prefer="threads") as parallel:
        for count in campaign.counts:
            if count == 0:
                clean = workspace.engine.error(None, technique)
                errors = [clean] * campaign.trials
                bar.update(len(chunks))
            else:
                parts = parallel(
                    delayed(_run_trials)(workspace, campaign, chunk, count, technique) for chunk in chunks
                )
                errors = [e for part in parts for e in part]
                bar.update(len(chunks))
            point = SweepPoint(count, errors)
            points.append(point)
            logger.debug(f"k={count}: median={point.median:.2f}% std={point.std:.2f}")
    bar.close()

    fault_filter = {
        "register_class": campaign.fault_filter.register_class,
        "layer": campaign.fault_filter.layer,
        "component": campaign.fault_filter.component,
        "include_accumulators": campaign.fault_filter.include_accumulators,
    }
    return CampaignResult(
        name=campaign.name if mitigation is None else f"{campaign.name}_{technique}",
        config_hash=config_hash(campaign),
        seed=campaign.seed,
        fault_kind=campaign.fault_kind,
        mitigation=technique,
        num_pes=campaign.num_pes,
        fault_filter=fault_filter,
        baseline_error=baseline,
        points=points,
    )


def compare_mitigations(
    campaign: CampaignConfig,
    workspace: Workspace,
    techniques: Sequence[str] = TECHNIQUES,
    n_jobs: Optional[int] = None,
    progress: bool = True,
) -> Dict[str, CampaignResult]:
    """The same seeded campaign under each mitigation technique."""
    return {
        technique: run_campaign(campaign, workspace, n_jobs, progress, mitigation=technique)
        for technique in techniques
    }
