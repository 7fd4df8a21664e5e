"""neurontrim: train dense networks that shed whole neurons.

Adds group penalties on each neuron's incoming and outgoing connection
weights so that training drives entire rows/columns of the weight matrices
to zero; magnitude pruning then exposes dead neurons, and compaction
rebuilds the network without them while preserving its outputs exactly.
"""

from .compression import (
    CompressionReport,
    NeuronSurvival,
    PruneSpec,
    analyze_neurons,
    compact,
    compression_stats,
    prune,
    sparsity_pattern,
)
from .data import (
    Dataset,
    SparseRegressionSpec,
    as_reconstruction,
    downscale,
    export_csv,
    gen_sparse_regression,
    load_mnist,
    save_idx_images,
    save_idx_labels,
    subsample,
    synthetic_digit_images,
)
from .errors import (
    ArgumentError,
    ConfigError,
    DataFormatError,
    DegenerateNetworkError,
    DimensionError,
    DivergenceError,
    MetricError,
    NeurontrimError,
)
from .experiments import (
    ExperimentConfig,
    RunResult,
    build_dataset,
    run_experiment,
    run_trials,
)
from .modelio import load_model, save_model
from .network import (
    DropoutSpec,
    Layer,
    Network,
    forward,
    forward_train,
    init_network,
)
from .numerics import (
    derive_rng,
    make_rng,
    sparse_vector,
    unit_sphere_columns,
)
from .regularizers import (
    RegularizerConfig,
    group_l0_counts,
    l1_value,
    l2_value,
    li_value,
    lo_value,
    regularizer_grad,
)
from .training import (
    Adam,
    Sgd,
    TrainConfig,
    TrainRecord,
    accuracy,
    backprop,
    euclidean_loss,
    evaluate_metric,
    nmse,
    softmax_xent,
    total_cost,
    train,
)

__version__ = "0.1.0"
