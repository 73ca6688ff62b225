"""
Shared desk-scale networks, trained once per test session.
"""

import numpy as np
import pytest

from src.accel.config import AcceleratorConfig
from src.campaign.config import CampaignConfig, TrainingConfig
from src.campaign.workspace import prepare_campaign
from src.nn.archive import build_archive
from src.nn.calibrate import calibrate
from src.nn.datasets import Dataset, DatasetSpec
from src.nn.topology import NetworkTopology
from src.nn.trainer import FloatNetwork


@pytest.fixture(scope="session")
def digits_config():
    return CampaignConfig(
        name="digits",
        seed=3,
        dataset=DatasetSpec(source="digits", seed=0),
        training=TrainingConfig(hidden=(32,), epochs=200),
        num_pes=16,
        wr_headroom=1,
        counts=(0, 1, 2, 4),
        trials=20,
    )


@pytest.fixture(scope="session")
def digits_workspace(digits_config, tmp_path_factory):
    return prepare_campaign(digits_config, tmp_path_factory.mktemp("digits"), progress=False)


@pytest.fixture(scope="session")
def blobs_config():
    return CampaignConfig(
        name="blobs",
        seed=5,
        dataset=DatasetSpec(source="blobs", samples=600, centers=2, seed=0),
        training=TrainingConfig(hidden=(8,), epochs=200),
        num_pes=4,
        counts=(0, 1, 2, 3),
        trials=30,
    )


@pytest.fixture(scope="session")
def blobs_workspace(blobs_config, tmp_path_factory):
    return prepare_campaign(blobs_config, tmp_path_factory.mktemp("blobs"), progress=False)


def tiny_archive(layer_sizes, seed: int = 0, width: int = 8, activation: str = "logsig"):
    """Random-weight network calibrated on random inputs, narrow registers."""
    rng = np.random.default_rng(seed)
    topology = NetworkTopology(tuple(layer_sizes), activation)
    weights = [rng.uniform(-1.0, 1.0, size=topology.matrix_shape(j)) for j in range(topology.num_matrices)]
    biases = [rng.uniform(-0.5, 0.5, size=topology.layer_sizes[j + 1]) for j in range(topology.num_matrices)]
    network = FloatNetwork(topology, weights, biases)
    inputs = rng.uniform(0.0, 1.0, size=(12, topology.input_size))
    dataset = Dataset(inputs, np.zeros(12, dtype=np.int64), topology.output_size, "tiny")
    formats = calibrate(network, dataset, total_width=width)
    return build_archive(network, formats), inputs


@pytest.fixture(scope="session")
def tiny_padded():
    """3-3-2 on 2 PEs: partial final chunks and neuron boundaries inside chunks."""
    archive, inputs = tiny_archive((3, 3, 2), seed=1)
    return AcceleratorConfig.from_archive(archive, 2), archive, inputs[:5]


@pytest.fixture(scope="session")
def tiny_aligned():
    """4-3-2 on 4 PEs."""
    archive, inputs = tiny_archive((4, 3, 2), seed=2)
    return AcceleratorConfig.from_archive(archive, 4), archive, inputs[:5]
