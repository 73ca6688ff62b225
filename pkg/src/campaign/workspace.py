"""
Campaign inputs: dataset split, weight archive and accelerator.

A campaign whose archive directory does not exist yet trains, calibrates and
saves one first, so presets that change the network can run unattended. Each
trained archive records the settings it came from in `source.json`; an archive
in the output directory whose record no longer matches is trained again.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

from src.accel.batch import BatchEngine
from src.accel.config import AcceleratorConfig
from src.nn.archive import MANIFEST_NAME, WeightArchive, build_archive, load_archive, save_archive
from src.nn.calibrate import calibrate, check_no_wrap
from src.nn.datasets import Dataset, load_dataset
from src.nn.reference import reference_error
from src.nn.topology import DimensionError, NetworkTopology
from src.nn.trainer import NetworkTrainer

from .config import CampaignConfig

logger = logging.getLogger(__name__)

ARCHIVE_SOURCE = "source.json"


@dataclass
class Workspace:
    """Everything a campaign's trials share."""

    archive: WeightArchive
    archive_path: Path
    accelerator: AcceleratorConfig
    test: Dataset
    engine: BatchEngine

    @property
    def baseline_error(self) -> float:
        return reference_error(self.archive, self.test.inputs, self.test.labels)


def train_archive(config: CampaignConfig, train: Dataset, progress: bool = True) -> Tuple[WeightArchive, dict]:
    """
    Train a float network on ``train``, calibrate it and quantize it.

    Returns:
        (archive, training metrics)
    """
    topology = NetworkTopology(
        (train.feature_count, *config.training.hidden, train.class_count),
        config.training.activation,
    )
    trainer = NetworkTrainer(
        topology,
        epochs=config.training.epochs,
        learning_rate=config.training.learning_rate,
        batch_size=config.training.batch_size,
        seed=config.training.seed,
        progress=progress,
        weight_decay=config.training.weight_decay,
    )
    network = trainer.train(train)
    metrics = trainer.evaluate(network, train, "Train")
    formats = calibrate(network, train, widths=config.widths, wr_headroom=config.wr_headroom)
    archive = build_archive(network, formats)
    wraps = check_no_wrap(archive, train.inputs)
    metrics["wrap_violations"] = wraps
    return archive, metrics


def resolve_archive_path(config: CampaignConfig, out_dir: Union[str, Path]) -> Path:
    if config.archive:
        return Path(config.archive)
    return Path(out_dir) / f"{config.name}_archive"


def archive_source(config: CampaignConfig) -> dict:
    """The configuration sections a trained archive depends on."""
    data = config.to_dict()
    return {key: data[key] for key in ("dataset", "training", "formats", "calibration")}


def save_trained_archive(archive: WeightArchive, config: CampaignConfig, path: Union[str, Path]) -> Path:
    """Save an archive together with the settings that produced it."""
    path = Path(path)
    save_archive(archive, path)
    source = json.dumps(archive_source(config), indent=2, sort_keys=True)
    (path / ARCHIVE_SOURCE).write_text(source + "\n")
    return path


def archive_is_current(config: CampaignConfig, path: Path) -> bool:
    """
    Whether the archive at ``path`` can serve ``config``.

    Archives named in the configuration without a source record are used as
    given.
    """
    if not (path / MANIFEST_NAME).exists():
        return False
    source = path / ARCHIVE_SOURCE
    if not source.exists():
        return config.archive is not None
    try:
        recorded = json.loads(source.read_text())
    except ValueError:
        return False
    return recorded == archive_source(config)


def prepare_campaign(
    config: CampaignConfig,
    out_dir: Union[str, Path] = "results",
    progress: bool = True,
    archive: Optional[WeightArchive] = None,
) -> Workspace:
    """Load (or train) the archive and build the batch engine over the test split."""
    train, test = load_dataset(config.dataset)
    if len(test) == 0:
        raise DimensionError("campaign test split is empty")

    path = resolve_archive_path(config, out_dir)
    if archive is None:
        if archive_is_current(config, path):
            archive = load_archive(path)
        else:
            logger.info(f"No archive for {config.name} at {path}; training one")
            archive, _ = train_archive(config, train, progress)
            save_trained_archive(archive, config, path)

    if archive.topology.input_size != test.feature_count:
        raise DimensionError(
            f"archive expects {archive.topology.input_size} inputs, dataset has {test.feature_count}"
        )
    accelerator = AcceleratorConfig.from_archive(archive, config.num_pes)
    engine = BatchEngine(accelerator, archive, test.inputs, test.labels)
    logger.info(
        f"Workspace {config.name}: {archive.topology} on {config.num_pes} PEs, "
        f"{len(test)} test items, T={accelerator.cycles_for_inference()} cycles"
    )
    return Workspace(archive, path, accelerator, test, engine)
