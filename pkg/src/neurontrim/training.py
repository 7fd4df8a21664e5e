"""Losses, exact backpropagation through the penalised cost, and training.

The cost minimised during training is

    cost = data_loss + l1 + l2 + li + lo

evaluated per minibatch for the data term and at the current weights for
the penalties.  ``backprop`` returns the exact reverse-mode gradient of
that cost for every weight and bias; dropout masks drawn for a minibatch
gate the same positions in forward and backward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ArgumentError, DimensionError, DivergenceError, MetricError
from .network import DropoutSpec, Network, activate, activate_grad, forward
from .numerics import derive_rng
from .regularizers import (
    RegularizerConfig,
    bias_penalty_grad,
    penalty_values,
    weight_penalty_grad,
)

LOSS_KINDS = ("euclidean", "softmax_xent", "reconstruction_mse")


# ---------------------------------------------------------------------------
# losses and metrics


def euclidean_loss(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Half mean squared error: sum of squared residuals over 2N."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DimensionError(f"target shape {y.shape} != prediction shape {y_hat.shape}")
    n = y.shape[0]
    return float(((y - y_hat) ** 2).sum() / (2.0 * n))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax_xent(logits: np.ndarray, classes: np.ndarray) -> float:
    """Mean negative log-probability of the observed class."""
    logits = np.asarray(logits, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    n, d = logits.shape
    if classes.shape != (n,):
        raise DimensionError(f"{n} rows of logits but class shape {classes.shape}")
    if np.any(classes < 0) or np.any(classes >= d):
        raise ArgumentError(f"class indices must lie in [0, {d})")
    lp = log_softmax(logits)
    return float(-lp[np.arange(n), classes].mean())


def nmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Normalised mean square error: sum (y - y_hat)^2 / sum y^2."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DimensionError(f"shapes {y.shape} and {y_hat.shape} differ")
    denom = float((y ** 2).sum())
    if denom == 0.0:
        raise MetricError("NMSE is undefined for an all-zero reference")
    return float(((y - y_hat) ** 2).sum()) / denom


def accuracy(logits: np.ndarray, classes: np.ndarray) -> float:
    return float((np.argmax(logits, axis=1) == np.asarray(classes)).mean())


def loss_value(kind: str, y_hat: np.ndarray, target) -> float:
    if kind in ("euclidean", "reconstruction_mse"):
        return euclidean_loss(target, y_hat)
    if kind == "softmax_xent":
        return softmax_xent(y_hat, target)
    raise ArgumentError(f"unknown loss kind {kind!r}")


def _loss_grad(kind: str, y_hat: np.ndarray, target) -> np.ndarray:
    n = y_hat.shape[0]
    if kind in ("euclidean", "reconstruction_mse"):
        return (y_hat - target) / n
    if kind == "softmax_xent":
        p = np.exp(log_softmax(y_hat))
        p[np.arange(n), np.asarray(target, dtype=np.int64)] -= 1.0
        return p / n
    raise ArgumentError(f"unknown loss kind {kind!r}")


def dataset_targets(ds: Dataset):
    return ds.classes if ds.task == "classification" else ds.targets


def evaluate_metric(net: Network, ds: Dataset) -> float:
    """Deterministic test metric: NMSE, or accuracy for classification."""
    y_hat = forward(net, ds.inputs)
    if ds.metric_kind == "accuracy":
        return accuracy(y_hat, ds.classes)
    return nmse(ds.targets, y_hat)


# ---------------------------------------------------------------------------
# cost and gradients


def total_cost(net: Network, x: np.ndarray, target, loss_kind: str,
               reg: RegularizerConfig) -> float:
    """Data loss on the batch plus all penalty values."""
    return loss_value(loss_kind, forward(net, x), target) + sum(
        penalty_values(net, reg).values()
    )


def masked_cost(net: Network, x: np.ndarray, target, loss_kind: str,
                reg: RegularizerConfig, masks: dict[int, np.ndarray],
                keep_prob: float) -> float:
    """Cost with fixed dropout masks applied; the quantity backprop differentiates."""
    h = np.asarray(x, dtype=np.float64)
    if 0 in masks:
        h = h * (masks[0] / keep_prob)
    for k, layer in enumerate(net.layers, start=1):
        h = activate(layer.activation, h @ layer.weights + layer.biases)
        if k in masks:
            h = h * (masks[k] / keep_prob)
    return loss_value(loss_kind, h, target) + sum(penalty_values(net, reg).values())


def backprop(
    net: Network,
    x: np.ndarray,
    target,
    loss_kind: str,
    reg: RegularizerConfig,
    dropout_masks: dict[int, np.ndarray] | None = None,
    keep_prob: float = 1.0,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradient of the penalised cost for every weight and bias.

    ``dropout_masks`` maps activation stages to the 0/1 masks drawn for
    this minibatch (stage 0 = input); the masked cost is differentiated,
    using the same mask positions in the backward pass.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DimensionError(f"expected a nonempty batch matrix, got shape {x.shape}")
    masks = dropout_masks or {}
    layers = net.layers
    n_layers = len(layers)

    # forward, keeping layer inputs, pre-activations, and activations
    a = x if 0 not in masks else x * (masks[0] / keep_prob)
    layer_in, pre, post = [], [], []
    for k, layer in enumerate(layers, start=1):
        layer_in.append(a)
        z = a @ layer.weights + layer.biases
        h = activate(layer.activation, z)
        pre.append(z)
        post.append(h)
        a = h if k not in masks else h * (masks[k] / keep_prob)

    grads_w: list[np.ndarray] = [None] * n_layers
    grads_b: list[np.ndarray] = [None] * n_layers
    d_h = _loss_grad(loss_kind, a, target)
    for k in range(n_layers - 1, -1, -1):
        layer = layers[k]
        if (k + 1) in masks:  # a_k = h_k * mask/keep
            d_h = d_h * (masks[k + 1] / keep_prob)
        d_z = d_h * activate_grad(layer.activation, pre[k], post[k])
        grads_w[k] = layer_in[k].T @ d_z + weight_penalty_grad(layer.weights, reg)
        grads_b[k] = d_z.sum(axis=0) + bias_penalty_grad(layer.biases, reg)
        if k > 0:
            # gradient w.r.t. this layer's input; the next iteration converts
            # it through that stage's mask
            d_h = d_z @ layer.weights.T
    return grads_w, grads_b


# ---------------------------------------------------------------------------
# optimizers


class Adam:
    """Bias-corrected Adam; updates parameters in place."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Sgd:
    """Plain stochastic gradient descent."""

    def __init__(self, params: list[np.ndarray], lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 100
    batch_size: int = 1
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ArgumentError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ArgumentError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ArgumentError("betas must lie in [0, 1)")
        # epochs = 0 is allowed: evaluate-only runs report on the initial net
        if self.epochs < 0 or self.batch_size < 1:
            raise ArgumentError("need epochs >= 0 and batch_size >= 1")

    def make_optimizer(self, params: list[np.ndarray]):
        if self.optimizer == "adam":
            return Adam(params, self.learning_rate, self.beta1, self.beta2, self.eps)
        return Sgd(params, self.learning_rate)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class EpochStats:
    epoch: int
    cost: float
    data_loss: float
    l1: float
    l2: float
    li: float
    lo: float
    test_metric: float  # nan when no test set was given

    FIELDS = ("epoch", "cost", "data_loss", "l1", "l2", "li", "lo", "test_metric")


@dataclass
class TrainRecord:
    rows: list[EpochStats] = field(default_factory=list)

    @property
    def final(self) -> EpochStats:
        return self.rows[-1]

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(",".join(EpochStats.FIELDS) + "\n")
            for r in self.rows:
                f.write(f"{r.epoch}," + ",".join(
                    repr(float(getattr(r, name))) for name in EpochStats.FIELDS[1:]) + "\n")


def _epoch_stats(epoch, net, ds, loss_kind, reg, test_ds) -> EpochStats:
    vals = penalty_values(net, reg)
    data_loss = loss_value(loss_kind, forward(net, ds.inputs), dataset_targets(ds))
    cost = data_loss + vals["l1"] + vals["l2"] + vals["li"] + vals["lo"]
    metric = evaluate_metric(net, test_ds) if test_ds is not None else float("nan")
    return EpochStats(epoch, cost, data_loss, vals["l1"], vals["l2"], vals["li"],
                      vals["lo"], metric)


def train(
    net: Network,
    dataset: Dataset,
    loss_kind: str,
    reg: RegularizerConfig,
    dropout: DropoutSpec | None,
    tcfg: TrainConfig,
    test_dataset: Dataset | None = None,
) -> tuple[Network, TrainRecord]:
    """Minibatch training of a copy of ``net``; deterministic given the seed.

    Per-epoch statistics are evaluated with the deterministic forward pass
    (no dropout) on the full training set, and the test metric likewise.
    A non-finite epoch cost aborts with :class:`DivergenceError`.
    """
    if loss_kind not in LOSS_KINDS:
        raise ArgumentError(f"unknown loss kind {loss_kind!r}")
    if len(dataset) == 0:
        raise ArgumentError("training dataset is empty")
    if dataset.input_dim != net.input_dim:
        raise DimensionError(
            f"dataset has {dataset.input_dim} features, network expects {net.input_dim}"
        )
    net = net.copy()
    params: list[np.ndarray] = []
    for layer in net.layers:
        params += [layer.weights, layer.biases]
    optimizer = tcfg.make_optimizer(params)

    shuffle_rng = derive_rng(tcfg.seed, 0)
    dropout_rng = derive_rng(tcfg.seed, 1)
    stages: list[int] = []
    keep = 1.0
    if dropout is not None and dropout.keep_prob < 1.0:
        stages = sorted(dropout.stages(len(net.layers)))
        keep = dropout.keep_prob
    dims = net.dims

    inputs = dataset.inputs
    target = dataset_targets(dataset)
    n = len(dataset)

    record = TrainRecord([_epoch_stats(0, net, dataset, loss_kind, reg, test_dataset)])
    if not np.isfinite(record.rows[0].cost):
        raise DivergenceError(0, record.rows[0].cost)

    for epoch in range(1, tcfg.epochs + 1):
        order = shuffle_rng.permutation(n) if tcfg.shuffle else np.arange(n)
        for start in range(0, n, tcfg.batch_size):
            idx = order[start : start + tcfg.batch_size]
            x = inputs[idx]
            y = target[idx]
            masks = {
                s: (dropout_rng.random((x.shape[0], dims[s])) < keep).astype(np.float64)
                for s in stages
            }
            gw, gb = backprop(net, x, y, loss_kind, reg, masks or None, keep)
            grads = [g for pair in zip(gw, gb) for g in pair]
            optimizer.step(params, grads)
        stats = _epoch_stats(epoch, net, dataset, loss_kind, reg, test_dataset)
        record.rows.append(stats)
        if not np.isfinite(stats.cost):
            raise DivergenceError(epoch, stats.cost)
    return net, record
