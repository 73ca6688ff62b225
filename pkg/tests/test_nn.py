import gzip
import json
import struct

import numpy as np
import pytest

from src.fxp import FixedPointFormat
from src.nn.activations import activate_float, logsig_raw, satlin_raw
from src.nn.archive import ArchiveError, build_archive, load_archive, save_archive
from src.nn.calibrate import calibrate, check_no_wrap, digit_bits_for
from src.nn.datasets import Dataset, DatasetError, DatasetSpec, load_csv, load_dataset, load_idx
from src.nn.reference import (
    classify_reference,
    forward_quantized,
    predict_reference,
    quantize_inputs,
    reference_error,
)
from src.nn.topology import DimensionError, NetworkError, NetworkTopology
from src.nn.trainer import FloatNetwork, NetworkTrainer

IMR = FixedPointFormat.parse("s1.d4.f11")
OUT = FixedPointFormat(0, 0, 16)


def test_topology_validation():
    topology = NetworkTopology((64, 32, 10))
    assert topology.num_matrices == 2
    assert topology.matrix_shape(1) == (32, 10)
    assert str(topology) == "64-32-10"
    with pytest.raises(NetworkError):
        NetworkTopology((4,))
    with pytest.raises(NetworkError):
        NetworkTopology((4, 2), "relu")
    with pytest.raises(DimensionError):
        topology.matrix_shape(2)


def test_logsig_fixed_points():
    assert logsig_raw(0, IMR, OUT) == 1 << 15
    assert logsig_raw(int(-10 * 2048) & IMR.mask, IMR, OUT) == 0
    assert logsig_raw(10 * 2048, IMR, OUT) == OUT.max_int


def test_logsig_tracks_sigmoid_and_is_monotonic():
    fmt = FixedPointFormat(1, 4, 7)
    signed = np.arange(fmt.min_int, fmt.max_int + 1)
    raws = signed & fmt.mask
    out = logsig_raw(raws, fmt, OUT)
    assert np.all(np.diff(out) >= 0)
    exact = activate_float("logsig", signed / 128.0)
    assert np.max(np.abs(out / 65536.0 - exact)) < 0.01


def test_logsig_is_symmetric_within_one_ulp():
    fmt = FixedPointFormat(1, 4, 7)
    signed = np.arange(-fmt.max_int, fmt.max_int + 1)
    total = logsig_raw(signed & fmt.mask, fmt, OUT) + logsig_raw(-signed & fmt.mask, fmt, OUT)
    assert np.all(np.abs(total - (1 << 16)) <= 1)


def test_satlin():
    assert satlin_raw(int(-0.5 * 2048) & IMR.mask, IMR, OUT) == 0
    assert satlin_raw(512, IMR, OUT) == 1 << 14
    assert satlin_raw(2 * 2048, IMR, OUT) == OUT.max_int


def test_digits_dataset():
    train, test = load_dataset(DatasetSpec(source="digits"))
    assert len(train) + len(test) == 1797
    assert train.feature_count == 64
    assert train.class_count == 10
    assert train.inputs.min() >= 0.0 and train.inputs.max() < 1.0


def test_split_is_deterministic_and_limit_caps_test():
    _, a = load_dataset(DatasetSpec(source="iris", seed=4))
    _, b = load_dataset(DatasetSpec(source="iris", seed=4))
    assert np.array_equal(a.inputs, b.inputs)
    _, limited = load_dataset(DatasetSpec(source="iris", seed=4, limit=7))
    assert len(limited) == 7


def test_zero_test_fraction_evaluates_on_training_items():
    train, test = load_dataset(DatasetSpec(source="wine", test_fraction=0.0))
    assert train is test
    assert test.inputs.max() < 1.0


def test_unknown_source():
    with pytest.raises(DatasetError):
        DatasetSpec(source="mnist-online")


def test_csv_dataset(tmp_path):
    path = tmp_path / "items.csv"
    path.write_text("1,51,102\n0,204,0\n")
    data = load_csv(path, divisor=255.0)
    assert data.labels.tolist() == [1, 0]
    assert np.allclose(data.inputs, [[0.2, 0.4], [0.8, 0.0]])


def test_missing_csv_dataset(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(DatasetSpec(source="csv", path=str(tmp_path / "absent.csv")))


def test_idx_dataset(tmp_path):
    images = tmp_path / "images.idx3.gz"
    labels = tmp_path / "labels.idx1"
    pixels = bytes([0, 128, 255, 64, 10, 20, 30, 40])
    with gzip.open(images, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, 2, 2, 2) + pixels)
    labels.write_bytes(struct.pack(">II", 0x801, 2) + bytes([3, 1]))

    data = load_idx(images, labels)
    assert data.inputs.shape == (2, 4)
    assert data.inputs[0].tolist() == [0.0, 0.5, 255 / 256, 0.25]
    assert data.labels.tolist() == [3, 1]
    assert data.class_count == 4


def test_idx_bad_magic(tmp_path):
    images = tmp_path / "images.idx3"
    labels = tmp_path / "labels.idx1"
    images.write_bytes(struct.pack(">IIII", 0x801, 1, 1, 1) + b"\x00")
    labels.write_bytes(struct.pack(">II", 0x801, 1) + b"\x00")
    with pytest.raises(DatasetError):
        load_idx(images, labels)


def test_training_is_deterministic():
    train, _ = load_dataset(DatasetSpec(source="iris"))
    topology = NetworkTopology((4, 6, 3))
    a = NetworkTrainer(topology, epochs=5, seed=9, progress=False).train(train)
    b = NetworkTrainer(topology, epochs=5, seed=9, progress=False).train(train)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_zero_epochs_return_the_initial_weights():
    train, _ = load_dataset(DatasetSpec(source="iris"))
    topology = NetworkTopology((4, 6, 3))
    trainer = NetworkTrainer(topology, epochs=0, seed=9, progress=False)
    trained = trainer.train(train)
    initial = trainer.initial_network(np.random.default_rng(9))
    for got, want in zip(trained.weights + trained.biases, initial.weights + initial.biases):
        assert np.array_equal(got, want)


def test_weight_decay_shrinks_weights():
    train, _ = load_dataset(DatasetSpec(source="iris"))
    topology = NetworkTopology((4, 6, 3))
    plain = NetworkTrainer(topology, epochs=20, seed=9, progress=False).train(train)
    decayed = NetworkTrainer(topology, epochs=20, seed=9, progress=False, weight_decay=0.05).train(train)
    assert sum(np.sum(w ** 2) for w in decayed.weights) < sum(np.sum(w ** 2) for w in plain.weights)
    with pytest.raises(NetworkError):
        NetworkTrainer(topology, weight_decay=-1.0)


def test_training_rejects_wrong_input_size():
    train, _ = load_dataset(DatasetSpec(source="iris"))
    with pytest.raises(DimensionError):
        NetworkTrainer(NetworkTopology((5, 3)), epochs=1, progress=False).train(train)


def test_blobs_network_learns(blobs_workspace):
    # fault-free error of the quantized network on held-out blobs
    assert blobs_workspace.baseline_error <= 5.0


def test_digit_bits():
    assert digit_bits_for(0.0) == 0
    assert digit_bits_for(0.999) == 0
    assert digit_bits_for(1.0) == 1
    assert digit_bits_for(3.9) == 2
    assert digit_bits_for(4.0) == 3


def test_calibrated_formats(digits_workspace, digits_config):
    archive = digits_workspace.archive
    first, hidden = archive.formats
    assert first.ir == FixedPointFormat(0, 0, 16)
    assert hidden.ir == FixedPointFormat(0, 0, 16)
    assert all(f.wr.width == 16 and f.imr.width == 16 for f in archive.formats)
    train, _ = load_dataset(digits_config.dataset)
    assert check_no_wrap(archive, train.inputs) == 0


def test_weight_formats_take_optional_headroom():
    topology = NetworkTopology((2, 1))
    network = FloatNetwork(topology, [np.array([[1.5], [-0.3]])], [np.array([0.25])])
    data = Dataset(np.array([[0.5, 0.5], [0.1, 0.9]]), np.zeros(2, dtype=np.int64), 1)
    assert calibrate(network, data)[0].wr == FixedPointFormat(1, 1, 14)
    assert calibrate(network, data, wr_headroom=1)[0].wr == FixedPointFormat(1, 2, 13)

    archive = build_archive(network, calibrate(network, data, wr_headroom=1))
    wr = archive.formats[0].wr
    words = np.concatenate([archive.weights[0].ravel(), archive.biases[0]])
    assert np.array_equal((words >> (wr.width - 1)) & 1, (words >> (wr.width - 2)) & 1)


def test_quantized_reference_tracks_float(digits_workspace):
    archive, test = digits_workspace.archive, digits_workspace.test
    quantized = reference_error(archive, test.inputs, test.labels)
    floating = reference_error(archive, test.inputs, test.labels, mode="float")
    assert quantized <= 15.0
    assert abs(quantized - floating) <= 3.0


def test_reference_layers(digits_workspace):
    archive = digits_workspace.archive
    x = quantize_inputs(archive, digits_workspace.test.inputs[:4])
    layers = forward_quantized(archive, x)
    assert [layer.shape for layer in layers] == [(4, 64), (4, 32), (4, 10)]
    assert np.array_equal(np.argmax(layers[-1], axis=1), predict_reference(archive, digits_workspace.test.inputs[:4]))


def test_classify_single_items(digits_workspace):
    archive, inputs = digits_workspace.archive, digits_workspace.test.inputs[:6]
    assert [classify_reference(archive, row) for row in inputs] == predict_reference(archive, inputs).tolist()
    with pytest.raises(DimensionError):
        classify_reference(archive, inputs)


def test_single_output_network_always_picks_class_zero():
    rng = np.random.default_rng(5)
    topology = NetworkTopology((3, 2, 1))
    network = FloatNetwork(topology, [rng.uniform(-1, 1, size=(3, 2)), rng.uniform(-1, 1, size=(2, 1))])
    inputs = rng.uniform(0.0, 1.0, size=(8, 3))
    archive = build_archive(network, calibrate(network, Dataset(inputs, np.zeros(8, dtype=np.int64), 1)))
    assert {classify_reference(archive, row) for row in inputs} == {0}
    assert classify_reference(archive, inputs[0], mode="float") == 0


def test_reference_rejects_empty_dataset(digits_workspace):
    empty = np.zeros((0, 64))
    with pytest.raises(DimensionError):
        reference_error(digits_workspace.archive, empty, np.zeros(0, dtype=np.int64))


def test_archive_round_trip(digits_workspace, tmp_path):
    archive = digits_workspace.archive
    save_archive(archive, tmp_path / "a")
    save_archive(archive, tmp_path / "b")
    for name in ("manifest.json", "W0.bin", "b0.bin", "W1.bin", "b1.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    loaded = load_archive(tmp_path / "a")
    assert loaded.topology == archive.topology
    assert loaded.formats == list(archive.formats)
    for j in range(archive.topology.num_matrices):
        assert np.array_equal(loaded.weights[j], archive.weights[j])
        assert np.array_equal(loaded.biases[j], archive.biases[j])


def test_archive_errors(digits_workspace, tmp_path):
    with pytest.raises(ArchiveError):
        load_archive(tmp_path / "missing")
    save_archive(digits_workspace.archive, tmp_path / "cut")
    (tmp_path / "cut" / "W1.bin").write_bytes(b"\x00\x00")
    with pytest.raises(ArchiveError):
        load_archive(tmp_path / "cut")

    save_archive(digits_workspace.archive, tmp_path / "bare")
    manifest = tmp_path / "bare" / "manifest.json"
    data = json.loads(manifest.read_text())
    del data["layers"][1]["formats"]
    manifest.write_text(json.dumps(data))
    with pytest.raises(ArchiveError):
        load_archive(tmp_path / "bare")


def test_dataset_invariants():
    with pytest.raises(DatasetError):
        Dataset(np.zeros((2, 3)), np.array([0, 5]), 2)
    with pytest.raises(DatasetError):
        Dataset(np.zeros(3), np.array([0, 1, 0]), 2)
