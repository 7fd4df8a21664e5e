"""Magnitude pruning, dead-neuron analysis, and exact network compaction.

The pipeline after training is: ``prune`` zeroes every weight below a
threshold; ``analyze_neurons`` finds units whose incoming column or
outgoing row became all-zero; ``compact`` rebuilds the network without
those units, folding any constant activation a removed unit still emitted
into the next layer's biases so the compacted network computes exactly
the same function.  ``compression_stats`` summarises the result the way
the comparison tables report it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateNetworkError
from .network import Layer, Network, activate


@dataclass
class PruneSpec:
    threshold: float = 1e-2

    def __post_init__(self):
        if self.threshold < 0:
            raise ArgumentError(f"threshold must be >= 0, got {self.threshold}")


def prune(net: Network, spec: PruneSpec) -> Network:
    """Zero every weight and bias with |value| < threshold; shapes unchanged."""
    layers = []
    for layer in net.layers:
        w = np.where(np.abs(layer.weights) < spec.threshold, 0.0, layer.weights)
        b = np.where(np.abs(layer.biases) < spec.threshold, 0.0, layer.biases)
        layers.append(Layer(w, b, layer.activation))
    return Network(layers)


@dataclass
class NeuronSurvival:
    """Survival masks per activation stage (0 = input, L = output).

    * input features survive iff their outgoing row in the first weight
      matrix has a nonzero entry;
    * hidden units survive iff both their incoming column and their
      outgoing row have a nonzero entry;
    * output units always survive (they are the model's interface);
      ``connected_outputs`` records which of them still receive anything,
      which is what the summary tables report for the output layer.
    """

    survives: list[np.ndarray]
    connected_outputs: np.ndarray

    @property
    def counts(self) -> list[tuple[int, int]]:
        return [(int(m.sum()), int(m.size)) for m in self.survives]

    def reported_counts(self) -> list[tuple[int, int]]:
        """Per-stage counts with the output stage counted by connectivity."""
        counts = self.counts
        counts[-1] = (int(self.connected_outputs.sum()), int(self.connected_outputs.size))
        return counts


def analyze_neurons(net: Network) -> NeuronSurvival:
    """Survival analysis on exact zeros; run after :func:`prune`."""
    has_out = [np.abs(layer.weights).sum(axis=1) > 0 for layer in net.layers]
    has_in = [np.abs(layer.weights).sum(axis=0) > 0 for layer in net.layers]
    survives = [has_out[0]]
    for k in range(len(net.layers) - 1):
        survives.append(has_in[k] & has_out[k + 1])
    survives.append(np.ones(net.output_dim, dtype=bool))
    return NeuronSurvival(survives, connected_outputs=has_in[-1])


def compact(
    net: Network, survival: NeuronSurvival | None = None,
    remove_dead_outputs: bool = False,
) -> tuple[Network, list[np.ndarray]]:
    """Physically remove every non-surviving input feature and hidden unit.

    A removed hidden unit with an all-zero incoming column still emits the
    constant ``act(bias)``; that constant, times the unit's outgoing row,
    is folded into the next layer's biases before deletion, so the
    compacted network's outputs equal the original's exactly (for
    logistic units this matters even at zero bias, since act(0) = 1/2).

    Output units are the model's interface and are kept by default;
    ``remove_dead_outputs=True`` deletes disconnected ones too (useful for
    reconstruction tasks where a dead output pixel is meaningful), after
    which only the surviving output coordinates are computed.

    Returns the smaller network and, per stage, the original indices the
    surviving units had; the stage-0 map says which input columns the
    compacted network consumes.
    """
    if survival is None:
        survival = analyze_neurons(net)
    keep = list(survival.survives)
    if remove_dead_outputs:
        keep[-1] = survival.connected_outputs
    for stage, mask in enumerate(keep):
        if not mask.any():
            raise DegenerateNetworkError(
                f"no surviving neurons at stage {stage}; nothing left to compact"
            )

    # fold constant outputs of zero-incoming hidden units into next biases
    biases = [layer.biases.copy() for layer in net.layers]
    for k in range(len(net.layers) - 1):
        layer = net.layers[k]
        zero_in = np.abs(layer.weights).sum(axis=0) == 0
        if zero_in.any():
            const = activate(layer.activation, layer.biases) * zero_in
            biases[k + 1] += const @ net.layers[k + 1].weights

    layers = []
    for k, layer in enumerate(net.layers):
        w = layer.weights[np.ix_(keep[k], keep[k + 1])]
        layers.append(Layer(w, biases[k][keep[k + 1]], layer.activation))
    index_maps = [np.flatnonzero(m) for m in keep]
    return Network(layers), index_maps


def sparsity_pattern(net: Network, layer_index: int) -> np.ndarray:
    """0/1 indicator matrix of a layer's nonzero weights."""
    if not (0 <= layer_index < len(net.layers)):
        raise IndexError(f"layer index {layer_index} out of range")
    return (net.layers[layer_index].weights != 0.0).astype(np.float64)


@dataclass
class CompressionReport:
    """Per-layer sparsity and neuron survival, in comparison-table form."""

    layer_nonzeros: list[int]
    layer_sizes: list[int]
    neuron_counts: list[tuple[int, int]]  # per stage, output counted by connectivity
    metric_before: float
    metric_after: float
    metric_kind: str = "nmse"

    @property
    def layer_percentages(self) -> list[float]:
        return [100.0 * nz / size for nz, size in zip(self.layer_nonzeros, self.layer_sizes)]

    @property
    def total_percentage(self) -> float:
        return 100.0 * sum(self.layer_nonzeros) / sum(self.layer_sizes)

    @property
    def neuron_percentages(self) -> list[float]:
        return [100.0 * kept / total for kept, total in self.neuron_counts]

    @property
    def total_neuron_percentage(self) -> float:
        kept = sum(k for k, _ in self.neuron_counts)
        total = sum(t for _, t in self.neuron_counts)
        return 100.0 * kept / total

    @property
    def compression_rate(self) -> float:
        nz = sum(self.layer_nonzeros)
        if nz == 0:
            return float("inf")
        return sum(self.layer_sizes) / nz


def compression_stats(
    dense_net: Network,
    pruned_net: Network,
    survival: NeuronSurvival | None = None,
    metric_before: float = float("nan"),
    metric_after: float = float("nan"),
    metric_kind: str = "nmse",
) -> CompressionReport:
    """Summarise pruning: weight percentages, neuron survival, compression rate.

    The compression rate is the dense weight count divided by the number of
    weights that survived pruning, biases excluded in both counts.
    """
    if [l.weights.shape for l in dense_net.layers] != [l.weights.shape for l in pruned_net.layers]:
        raise ArgumentError("dense and pruned networks must share an architecture")
    if survival is None:
        survival = analyze_neurons(pruned_net)
    return CompressionReport(
        layer_nonzeros=[int((l.weights != 0).sum()) for l in pruned_net.layers],
        layer_sizes=[l.weights.size for l in dense_net.layers],
        neuron_counts=survival.reported_counts(),
        metric_before=metric_before,
        metric_after=metric_after,
        metric_kind=metric_kind,
    )
