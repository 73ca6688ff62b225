"""
Minimal floating-point trainer for desk-scale networks.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from sklearn.metrics import accuracy_score
from tqdm import tqdm

from .activations import activate_float, activation_gradient
from .datasets import Dataset
from .topology import DimensionError, NetworkError, NetworkTopology

logger = logging.getLogger(__name__)


class TrainingDivergedError(NetworkError):
    """Raised when the training loss stops being finite."""
    pass


@dataclass
class FloatNetwork:
    """Float weights W_j (|L_j| x |L_{j+1}|) and biases b_j (|L_{j+1}|)."""

    topology: NetworkTopology
    weights: List[np.ndarray]
    biases: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.biases:
            self.biases = [np.zeros(self.topology.layer_sizes[j + 1]) for j in range(self.topology.num_matrices)]
        if len(self.weights) != self.topology.num_matrices or len(self.biases) != self.topology.num_matrices:
            raise DimensionError(
                f"{self.topology} needs {self.topology.num_matrices} weight matrices and bias vectors"
            )
        for j, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != self.topology.matrix_shape(j) or b.shape != (self.topology.layer_sizes[j + 1],):
                raise DimensionError(
                    f"Layer_{j}: weights {w.shape} / biases {b.shape} do not match {self.topology}"
                )

    def forward(self, inputs: np.ndarray) -> List[np.ndarray]:
        """Activations of every layer, inputs first."""
        x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if x.shape[1] != self.topology.input_size:
            raise DimensionError(f"expected {self.topology.input_size} inputs, got {x.shape[1]}")
        layers = [x]
        for w, b in zip(self.weights, self.biases):
            layers.append(activate_float(self.topology.activation, layers[-1] @ w + b))
        return layers

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(inputs)[-1], axis=1)


class NetworkTrainer:
    """
    Plain minibatch SGD with backpropagation; deterministic given the seed.

    ``weight_decay`` is an L2 penalty on the weights; biases are not decayed.
    """

    def __init__(
        self,
        topology: NetworkTopology,
        epochs: int = 200,
        learning_rate: float = 0.5,
        batch_size: int = 32,
        seed: int = 0,
        progress: bool = True,
        weight_decay: float = 0.0,
    ):
        if epochs < 0 or batch_size < 1 or learning_rate <= 0 or weight_decay < 0:
            raise NetworkError(
                f"invalid training parameters: epochs={epochs} batch_size={batch_size} "
                f"learning_rate={learning_rate} weight_decay={weight_decay}"
            )
        self.topology = topology
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.progress = progress
        self.weight_decay = weight_decay

    def initial_network(self, rng: np.random.Generator) -> FloatNetwork:
        """Glorot-uniform weights, zero biases."""
        weights = []
        for j in range(self.topology.num_matrices):
            fan_in, fan_out = self.topology.matrix_shape(j)
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        return FloatNetwork(self.topology, weights)

    def train(self, dataset: Dataset) -> FloatNetwork:
        if dataset.feature_count != self.topology.input_size:
            raise DimensionError(
                f"dataset has {dataset.feature_count} features, topology expects {self.topology.input_size}"
            )
        if dataset.class_count > self.topology.output_size:
            raise DimensionError(
                f"{dataset.class_count} classes do not fit {self.topology.output_size} outputs"
            )

        rng = np.random.default_rng(self.seed)
        network = self.initial_network(rng)
        targets = np.eye(self.topology.output_size)[dataset.labels]
        act = self.topology.activation

        logger.info(
            f"Training {self.topology} ({act}) on {len(dataset)} items: "
            f"{self.epochs} epochs, lr={self.learning_rate}, batch={self.batch_size}, decay={self.weight_decay}"
        )
        epochs = tqdm(range(self.epochs), desc="Training", disable=not self.progress)
        for epoch in epochs:
            order = rng.permutation(len(dataset))
            for start in range(0, len(order), self.batch_size):
                idx = order[start:start + self.batch_size]
                self._step(network, dataset.inputs[idx], targets[idx], act)

            outputs = network.forward(dataset.inputs)[-1]
            loss = 0.5 * float(np.mean(np.sum((outputs - targets) ** 2, axis=1)))
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss became {loss} at epoch {epoch}")
            epochs.set_postfix(loss=f"{loss:.4f}")
            logger.debug(f"Epoch {epoch}: loss={loss:.6f}")

        return network

    def _step(self, network: FloatNetwork, x: np.ndarray, t: np.ndarray, act: str) -> None:
        layers = [x]
        pre = []
        for w, b in zip(network.weights, network.biases):
            pre.append(layers[-1] @ w + b)
            layers.append(activate_float(act, pre[-1]))

        # output delta a - t for both activations
        delta = layers[-1] - t
        scale = self.learning_rate / len(x)
        for j in reversed(range(self.topology.num_matrices)):
            grad_w = layers[j].T @ delta + self.weight_decay * len(x) * network.weights[j]
            grad_b = delta.sum(axis=0)
            if j > 0:
                delta = (delta @ network.weights[j].T) * activation_gradient(act, pre[j - 1], layers[j])
            network.weights[j] -= scale * grad_w
            network.biases[j] -= scale * grad_b

    def evaluate(self, network: FloatNetwork, dataset: Dataset, set_name: str = "Test") -> Dict[str, float]:
        predictions = network.predict(dataset.inputs)
        accuracy = accuracy_score(dataset.labels, predictions)
        logger.info(f"--- {set_name} Metrics ---")
        logger.info(f"Accuracy: {accuracy:.4f}")
        logger.info(f"Error: {100.0 * (1.0 - accuracy):.2f}%")
        return {"accuracy": float(accuracy), "error": 100.0 * (1.0 - float(accuracy))}
