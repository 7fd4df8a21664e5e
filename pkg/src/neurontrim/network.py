"""Multilayer perceptron: layers, activations, forward passes, dropout.

A network with layer sizes ``n0 -> n1 -> ... -> nL`` stores one weight
matrix per layer, shaped (fan_in, fan_out), so activations propagate as
``h_l = act_l(h_{l-1} @ W_l + b_l)``.  Rows of ``W_l`` are a previous-layer
neuron's outgoing connections; columns are a current-layer neuron's
incoming connections.  The output layer applies its own activation like
any other (linear for regression heads, logistic for reconstruction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ArgumentError, DimensionError
from .numerics import Rng, as_matrix, as_vector

ACTIVATIONS = ("linear", "logistic", "relu")

_POS_OPEN = np.nextafter(0.0, 1.0)
_ONE_OPEN = np.nextafter(1.0, 0.0)


def activate(kind: str, z: np.ndarray) -> np.ndarray:
    """Apply an activation elementwise.

    ``logistic`` is clamped to the open interval (0, 1): float64 saturates
    to exactly 0.0/1.0 for |z| > ~37, and downstream code relies on the
    strict bounds.
    """
    if kind == "linear":
        return z
    if kind == "logistic":
        return np.clip(expit(z), _POS_OPEN, _ONE_OPEN)
    if kind == "relu":
        return np.maximum(z, 0.0)
    raise ArgumentError(f"unknown activation {kind!r}")


def activate_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation, given pre-activation z and output a."""
    if kind == "linear":
        return np.ones_like(z)
    if kind == "logistic":
        return a * (1.0 - a)
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    raise ArgumentError(f"unknown activation {kind!r}")


@dataclass
class Layer:
    """One dense layer: weights (fan_in, fan_out), biases (fan_out,)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        self.biases = as_vector(self.biases)
        if self.weights.shape[1] != self.biases.shape[0]:
            raise DimensionError(
                f"weights {self.weights.shape} need {self.weights.shape[1]} biases, "
                f"got {self.biases.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ArgumentError(f"unknown activation {self.activation!r}")

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "Layer":
        return Layer(self.weights.copy(), self.biases.copy(), self.activation)


@dataclass
class Network:
    """An ordered stack of dense layers."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("a network needs at least one layer")
        for k in range(len(self.layers) - 1):
            a, b = self.layers[k], self.layers[k + 1]
            if a.fan_out != b.fan_in:
                raise DimensionError(
                    f"layer {k} outputs {a.fan_out} units but layer {k + 1} expects {b.fan_in}"
                )

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].fan_in] + [l.fan_out for l in self.layers]

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers])

    def weight_count(self) -> int:
        """Total number of weight entries, biases excluded."""
        return sum(l.weights.size for l in self.layers)


@dataclass
class DropoutSpec:
    """Inverted dropout applied while training.

    ``apply_to`` holds activation-stage indices: stage 0 is the network
    input, stage k >= 1 is the output of layer k (1-based), and the final
    output (stage L) is never masked.  Default: every hidden stage.
    """

    keep_prob: float = 0.5
    apply_to: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if not (0.0 < self.keep_prob <= 1.0):
            raise ArgumentError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        self.apply_to = frozenset(int(i) for i in self.apply_to)

    @staticmethod
    def hidden_only(num_layers: int, keep_prob: float = 0.5) -> "DropoutSpec":
        return DropoutSpec(keep_prob, frozenset(range(1, num_layers)))

    @staticmethod
    def with_input(num_layers: int, keep_prob: float = 0.5) -> "DropoutSpec":
        return DropoutSpec(keep_prob, frozenset(range(0, num_layers)))

    def stages(self, num_layers: int) -> frozenset[int]:
        bad = [i for i in self.apply_to if not (0 <= i < num_layers)]
        if bad:
            raise ArgumentError(f"dropout stages {bad} out of range for {num_layers} layers")
        return self.apply_to


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Deterministic forward pass for a (batch, input_dim) matrix."""
    h = as_matrix(x, cols=net.input_dim)
    for layer in net.layers:
        h = activate(layer.activation, h @ layer.weights + layer.biases)
    return h


def forward_train(
    net: Network, x: np.ndarray, dropout: DropoutSpec, rng: Rng
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Forward pass with inverted dropout; returns (output, masks by stage).

    Masked stages are multiplied by a Bernoulli(keep_prob) 0/1 mask and
    rescaled by 1/keep_prob, so the masked activation is unbiased and the
    deterministic :func:`forward` needs no test-time correction.  With
    keep_prob=1 the output equals ``forward`` bitwise.
    """
    stages = dropout.stages(len(net.layers))
    keep = dropout.keep_prob
    masks: dict[int, np.ndarray] = {}

    h = as_matrix(x, cols=net.input_dim)
    if 0 in stages:
        masks[0] = _draw_mask(rng, h.shape, keep)
        h = h * (masks[0] / keep)
    for k, layer in enumerate(net.layers, start=1):
        h = activate(layer.activation, h @ layer.weights + layer.biases)
        if k in stages and k < len(net.layers):
            masks[k] = _draw_mask(rng, h.shape, keep)
            h = h * (masks[k] / keep)
    return h, masks


def _draw_mask(rng: Rng, shape, keep_prob: float) -> np.ndarray:
    if keep_prob == 1.0:
        return np.ones(shape)
    return (rng.random(shape) < keep_prob).astype(np.float64)


def init_network(rng: Rng, dims: list[int], activations: list[str]) -> Network:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    if len(dims) < 2:
        raise DimensionError(f"need at least input and output dims, got {dims}")
    if len(activations) != len(dims) - 1:
        raise DimensionError(
            f"{len(dims) - 1} layers need {len(dims) - 1} activations, got {len(activations)}"
        )
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Network(layers)
