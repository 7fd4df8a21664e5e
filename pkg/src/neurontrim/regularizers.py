"""Weight penalties that drive whole neurons to zero, plus their gradients.

Four penalties are supported, each summed over every layer of a network:

* ``l1``: lambda * (sum |W| + sum |b|), the classic sparsifier,
* ``l2``: lambda * (sum W^2 + sum b^2), weight decay,
* ``li``: lambda * sum of column norms  ||W[:, j]||_2  --  the group of
  connections coming *into* neuron j; a zero column means neuron j
  receives nothing,
* ``lo``: lambda * sum of row norms  ||W[i, :]||_2  --  the group of
  connections going *out* of neuron i; a zero row means neuron i is
  never heard.

The group penalties are what make pruning remove neurons instead of just
connections: the square root couples all weights of a group, so gradient
descent either keeps a group alive or pushes it to zero together.  Biases
take part only in l1/l2 (and can be excluded there too).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .network import Network


@dataclass
class RegularizerConfig:
    lambda_l1: float = 0.0
    lambda_l2: float = 0.0
    lambda_li: float = 0.0
    lambda_lo: float = 0.0
    group_eps: float = 1e-8
    include_bias_in_l1l2: bool = True

    def __post_init__(self):
        for name in ("lambda_l1", "lambda_l2", "lambda_li", "lambda_lo"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.group_eps <= 0:
            raise ArgumentError(f"group_eps must be > 0, got {self.group_eps}")

    def any_active(self) -> bool:
        return any((self.lambda_l1, self.lambda_l2, self.lambda_li, self.lambda_lo))


def l1_value(net: Network, lam: float, include_bias: bool = True) -> float:
    total = 0.0
    for layer in net.layers:
        total += np.abs(layer.weights).sum()
        if include_bias:
            total += np.abs(layer.biases).sum()
    return float(lam * total)


def l2_value(net: Network, lam: float, include_bias: bool = True) -> float:
    total = 0.0
    for layer in net.layers:
        total += (layer.weights ** 2).sum()
        if include_bias:
            total += (layer.biases ** 2).sum()
    return float(lam * total)


def li_value(net: Network, lam: float) -> float:
    """Incoming-group penalty: sum over layers of all column norms."""
    return float(lam * sum(
        np.linalg.norm(layer.weights, axis=0).sum() for layer in net.layers
    ))


def lo_value(net: Network, lam: float) -> float:
    """Outgoing-group penalty: sum over layers of all row norms."""
    return float(lam * sum(
        np.linalg.norm(layer.weights, axis=1).sum() for layer in net.layers
    ))


def penalty_values(net: Network, cfg: RegularizerConfig) -> dict[str, float]:
    """All four penalty values at the network's current weights."""
    bias = cfg.include_bias_in_l1l2
    return {
        "l1": l1_value(net, cfg.lambda_l1, bias) if cfg.lambda_l1 else 0.0,
        "l2": l2_value(net, cfg.lambda_l2, bias) if cfg.lambda_l2 else 0.0,
        "li": li_value(net, cfg.lambda_li) if cfg.lambda_li else 0.0,
        "lo": lo_value(net, cfg.lambda_lo) if cfg.lambda_lo else 0.0,
    }


def total_penalty(net: Network, cfg: RegularizerConfig) -> float:
    return sum(penalty_values(net, cfg).values())


def weight_penalty_grad(w: np.ndarray, cfg: RegularizerConfig) -> np.ndarray:
    """Subgradient of the combined penalty for one weight matrix.

    Group-norm terms use the smoothed denominator max(norm, group_eps);
    a group that is exactly zero gets a zero subgradient (the choice that
    keeps dead groups dead), and sign(0) = 0 for the l1 term.
    """
    g = np.zeros_like(w)
    if cfg.lambda_l1:
        g += cfg.lambda_l1 * np.sign(w)
    if cfg.lambda_l2:
        g += (2.0 * cfg.lambda_l2) * w
    if cfg.lambda_li:
        col = np.maximum(np.linalg.norm(w, axis=0), cfg.group_eps)
        g += cfg.lambda_li * (w / col)
    if cfg.lambda_lo:
        row = np.maximum(np.linalg.norm(w, axis=1), cfg.group_eps)
        g += cfg.lambda_lo * (w / row[:, None])
    return g


def bias_penalty_grad(b: np.ndarray, cfg: RegularizerConfig) -> np.ndarray:
    """Subgradient of the l1/l2 penalty for one bias vector."""
    g = np.zeros_like(b)
    if cfg.include_bias_in_l1l2:
        if cfg.lambda_l1:
            g += cfg.lambda_l1 * np.sign(b)
        if cfg.lambda_l2:
            g += (2.0 * cfg.lambda_l2) * b
    return g


def regularizer_grad(net: Network, cfg: RegularizerConfig) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-layer (weight gradients, bias gradients) of the total penalty."""
    gw = [weight_penalty_grad(layer.weights, cfg) for layer in net.layers]
    gb = [bias_penalty_grad(layer.biases, cfg) for layer in net.layers]
    return gw, gb


def group_l0_counts(net: Network, threshold: float = 0.0) -> list[tuple[int, int]]:
    """Per layer: how many columns / rows have group norm above threshold.

    This is the quantity the group penalties are a convex surrogate for;
    it is reported as a metric, never optimised directly.
    """
    if threshold < 0:
        raise ArgumentError(f"threshold must be >= 0, got {threshold}")
    counts = []
    for layer in net.layers:
        cols = int((np.linalg.norm(layer.weights, axis=0) > threshold).sum())
        rows = int((np.linalg.norm(layer.weights, axis=1) > threshold).sum())
        counts.append((cols, rows))
    return counts
