"""Experiment harness: validated configs, the train->prune->compact pipeline,
and seeded multi-trial studies.

A config file is one JSON document that fully determines a run given its
seed.  ``run_experiment`` executes the pipeline and (optionally) writes a
run directory: the effective config, dense/pruned/compacted model files,
the per-epoch training record, the compression report in both table and
key=value form, and per-layer weight images.  Nothing written contains a
timestamp, so identical configs reproduce identical bytes.

``run_trials`` repeats an experiment on freshly drawn data with one
independent RNG stream per trial; a config may declare named method
variants (regulariser/dropout overrides) that are trained on the same
data within each trial, which is how the regularisation comparisons are
produced.
"""

from __future__ import annotations

import csv
import hashlib
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import data as datamod
from .compression import (
    CompressionReport,
    NeuronSurvival,
    PruneSpec,
    analyze_neurons,
    compact,
    compression_stats,
    prune,
)
from .errors import ArgumentError, ConfigError, DegenerateNetworkError, DimensionError
from .modelio import save_model
from .network import DropoutSpec, Network, forward, init_network
from .numerics import derive_rng
from .regularizers import RegularizerConfig
from .reports import format_report, machine_report, write_sparsity_images
from .training import (
    TrainConfig,
    TrainRecord,
    accuracy,
    evaluate_metric,
    nmse,
    train,
)

SCHEMA_VERSION = 1

# penalty strengths used when a config omits them; strong enough to empty
# unused groups within the reference training budget, weak enough to keep
# the surviving weights within a few percent of the unpenalised fit
DEFAULT_LAMBDAS = {
    "lambda_l1": 3e-5,
    "lambda_l2": 0.0,
    "lambda_li": 2e-4,
    "lambda_lo": 2e-4,
}

DATASET_KINDS = ("sparse_regression", "mnist", "synthetic_images")

# RNG stream keys under one experiment seed (training itself uses 0 and 1)
_KEY_DATA = 10
_KEY_INIT = 11
_KEY_TRIALS = 1000


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _field(doc: dict, key: str, path: str, default=None, required=False):
    if key not in doc:
        _expect(not required, f"{path}.{key}: missing required field")
        return default
    return doc[key]


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    dataset: dict
    dims: list[int]
    activations: list[str]
    loss: str
    regularizers: RegularizerConfig
    dropout: DropoutSpec | None
    train: TrainConfig
    prune: PruneSpec
    methods: dict[str, dict]
    output_dir: str | None = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        _expect(isinstance(doc, dict), "config: expected a JSON object")
        version = doc.get("schema_version", SCHEMA_VERSION)
        _expect(version == SCHEMA_VERSION,
                f"schema_version: unsupported value {version!r}")
        unknown = set(doc) - {
            "schema_version", "name", "seed", "dataset", "model", "loss",
            "regularizers", "dropout", "train", "prune", "methods", "output_dir",
        }
        _expect(not unknown, f"config: unknown fields {sorted(unknown)}")

        name = _field(doc, "name", "config", default="experiment")
        seed = _field(doc, "seed", "config", required=True)
        _expect(isinstance(seed, int) and seed >= 0, "seed: expected a non-negative integer")

        dataset = _field(doc, "dataset", "config", required=True)
        _expect(isinstance(dataset, dict), "dataset: expected an object")
        kind = _field(dataset, "kind", "dataset", required=True)
        _expect(kind in DATASET_KINDS, f"dataset.kind: unknown kind {kind!r}")

        model = _field(doc, "model", "config", required=True)
        dims = _field(model, "dims", "model", required=True)
        _expect(isinstance(dims, list) and len(dims) >= 2
                and all(isinstance(d, int) and d >= 1 for d in dims),
                "model.dims: expected a list of at least two positive integers")
        acts = _field(model, "activations", "model", required=True)
        if isinstance(acts, str):
            acts = [acts] * (len(dims) - 1)
        _expect(isinstance(acts, list) and len(acts) == len(dims) - 1,
                f"model.activations: expected {len(dims) - 1} entries or one name")

        loss = _field(doc, "loss", "config", required=True)

        reg_doc = dict(_field(doc, "regularizers", "config", default={}))
        for lam, value in DEFAULT_LAMBDAS.items():
            reg_doc.setdefault(lam, value)
        try:
            reg = RegularizerConfig(**reg_doc)
        except (TypeError, ArgumentError) as exc:
            raise ConfigError(f"regularizers: {exc}") from exc

        dropout = _parse_dropout(_field(doc, "dropout", "config"), len(dims) - 1)

        train_doc = dict(_field(doc, "train", "config", default={}))
        train_doc.setdefault("seed", seed)
        try:
            tcfg = TrainConfig(**train_doc)
        except (TypeError, ArgumentError) as exc:
            raise ConfigError(f"train: {exc}") from exc

        prune_doc = _field(doc, "prune", "config", default={})
        try:
            pspec = PruneSpec(**prune_doc)
        except (TypeError, ArgumentError) as exc:
            raise ConfigError(f"prune: {exc}") from exc

        methods = _field(doc, "methods", "config", default={})
        _expect(isinstance(methods, dict), "methods: expected an object")
        for mname, override in methods.items():
            _expect(isinstance(override, dict), f"methods.{mname}: expected an object")
            bad = set(override) - {"regularizers", "dropout", "train", "prune", "loss"}
            _expect(not bad, f"methods.{mname}: cannot override {sorted(bad)}")

        cfg = ExperimentConfig(
            name=name, seed=seed, dataset=dataset, dims=dims, activations=acts,
            loss=loss, regularizers=reg, dropout=dropout, train=tcfg, prune=pspec,
            methods=methods, output_dir=doc.get("output_dir"),
        )
        _validate_dataset_section(dataset)
        _check_loss_and_task(cfg)
        return cfg

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        try:
            return ExperimentConfig.from_dict(doc)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        """Canonical form: everything that determines the run, nothing else."""
        doc = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "dataset": self.dataset,
            "model": {"dims": self.dims, "activations": self.activations},
            "loss": self.loss,
            "regularizers": asdict(self.regularizers),
            "dropout": None if self.dropout is None else {
                "keep_prob": self.dropout.keep_prob,
                "apply_to": sorted(self.dropout.apply_to),
            },
            "train": asdict(self.train),
            "prune": {"threshold": self.prune.threshold},
        }
        if self.methods:
            doc["methods"] = self.methods
        return doc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"),
                          allow_nan=False) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    # -- derived configs ---------------------------------------------------

    def with_seed(self, seed: int) -> "ExperimentConfig":
        doc = self.to_dict()
        doc["seed"] = int(seed)
        doc["train"] = dict(doc["train"], seed=int(seed))
        return ExperimentConfig.from_dict(doc)

    def method_names(self) -> list[str]:
        return list(self.methods) if self.methods else [self.name]

    def for_method(self, method: str) -> "ExperimentConfig":
        if not self.methods:
            return self
        _expect(method in self.methods, f"methods.{method}: no such method")
        doc = self.to_dict()
        doc.pop("methods", None)
        override = self.methods[method]
        for key in ("regularizers", "train", "prune"):
            if key in override:
                doc[key] = {**doc[key], **override[key]}
        if "dropout" in override:
            doc["dropout"] = override["dropout"]
        if "loss" in override:
            doc["loss"] = override["loss"]
        doc["name"] = f"{self.name}:{method}"
        return ExperimentConfig.from_dict(doc)


def _parse_dropout(doc, num_layers: int) -> DropoutSpec | None:
    if doc is None:
        return None
    _expect(isinstance(doc, dict), "dropout: expected an object or null")
    keep = _field(doc, "keep_prob", "dropout", default=0.5)
    stages = _field(doc, "apply_to", "dropout", default="hidden")
    if stages == "hidden":
        spec = DropoutSpec.hidden_only(num_layers, keep)
    elif stages == "all":
        spec = DropoutSpec.with_input(num_layers, keep)
    else:
        _expect(isinstance(stages, list) and all(isinstance(i, int) for i in stages),
                'dropout.apply_to: expected "hidden", "all", or a list of stages')
        try:
            spec = DropoutSpec(keep, frozenset(stages))
            spec.stages(num_layers)
        except ArgumentError as exc:
            raise ConfigError(f"dropout: {exc}") from exc
    return spec


def _validate_dataset_section(ds: dict) -> None:
    kind = ds["kind"]
    if kind == "sparse_regression":
        allowed = {"kind", "n_features", "n_nonzero", "n_train", "n_test",
                   "noise_sigma", "magnitude_dist"}
    elif kind == "mnist":
        allowed = {"kind", "train_images", "train_labels", "test_images",
                   "test_labels", "task", "subsample_train", "subsample_test",
                   "downscale"}
        for key in ("train_images", "train_labels", "test_images", "test_labels"):
            _expect(key in ds, f"dataset.{key}: missing required field")
    else:  # synthetic_images
        allowed = {"kind", "n_train", "n_test", "side", "margin", "task", "downscale"}
        for key in ("n_train", "n_test"):
            _expect(key in ds, f"dataset.{key}: missing required field")
    unknown = set(ds) - allowed
    _expect(not unknown, f"dataset: unknown fields {sorted(unknown)}")
    task = ds.get("task", "classification" if kind == "mnist" else "reconstruction")
    if kind != "sparse_regression":
        _expect(task in ("classification", "reconstruction"),
                f"dataset.task: unknown task {task!r}")


def _check_loss_and_task(cfg: ExperimentConfig) -> None:
    kind = cfg.dataset["kind"]
    task = ("regression" if kind == "sparse_regression"
            else cfg.dataset.get("task", "classification" if kind == "mnist"
                                 else "reconstruction"))
    wants = {"regression": ("euclidean",),
             "reconstruction": ("euclidean", "reconstruction_mse"),
             "classification": ("softmax_xent",)}[task]
    _expect(cfg.loss in wants,
            f"loss: {cfg.loss!r} does not fit a {task} dataset (expected one of {wants})")


# ---------------------------------------------------------------------------
# dataset construction


def build_dataset(ds_cfg: dict, rng) -> tuple[datamod.Dataset, datamod.Dataset, dict]:
    """Materialise the config's dataset; returns (train, test, extras)."""
    kind = ds_cfg["kind"]
    if kind == "sparse_regression":
        spec = datamod.SparseRegressionSpec(
            n_features=ds_cfg.get("n_features", 20),
            n_nonzero=ds_cfg.get("n_nonzero", 2),
            n_train=ds_cfg.get("n_train", 500),
            n_test=ds_cfg.get("n_test", 500),
            noise_sigma=ds_cfg.get("noise_sigma", 0.01),
            magnitude_dist=ds_cfg.get("magnitude_dist", "gaussian(0,5)"),
        )
        train_ds, test_ds, x0 = datamod.gen_sparse_regression(rng, spec)
        return train_ds, test_ds, {"x0": x0}

    if kind == "mnist":
        train_ds = datamod.load_mnist(ds_cfg["train_images"], ds_cfg["train_labels"])
        test_ds = datamod.load_mnist(ds_cfg["test_images"], ds_cfg["test_labels"])
    else:
        train_ds = datamod.synthetic_digit_images(
            rng, ds_cfg["n_train"], side=ds_cfg.get("side", 28),
            margin=ds_cfg.get("margin", 4))
        test_ds = datamod.synthetic_digit_images(
            rng, ds_cfg["n_test"], side=ds_cfg.get("side", 28),
            margin=ds_cfg.get("margin", 4))
    if ds_cfg.get("subsample_train"):
        train_ds = datamod.subsample(train_ds, rng, ds_cfg["subsample_train"])
    if ds_cfg.get("subsample_test"):
        test_ds = datamod.subsample(test_ds, rng, ds_cfg["subsample_test"])
    if ds_cfg.get("downscale"):
        train_ds = datamod.downscale(train_ds, ds_cfg["downscale"])
        test_ds = datamod.downscale(test_ds, ds_cfg["downscale"])
    task = ds_cfg.get("task", "classification" if kind == "mnist" else "reconstruction")
    if task == "reconstruction":
        train_ds = datamod.as_reconstruction(train_ds)
        test_ds = datamod.as_reconstruction(test_ds)
    return train_ds, test_ds, {}


# ---------------------------------------------------------------------------
# single experiment


@dataclass
class RunResult:
    config: ExperimentConfig
    train_ds: datamod.Dataset
    test_ds: datamod.Dataset
    extras: dict
    dense_net: Network
    pruned_net: Network
    compact_net: Network | None
    index_maps: list[np.ndarray] | None
    survival: NeuronSurvival
    report: CompressionReport
    record: TrainRecord
    compact_error: str | None = None

    @property
    def metric_dense(self) -> float:
        return self.report.metric_before

    @property
    def metric_pruned(self) -> float:
        return self.report.metric_after


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Train, prune, analyse, compact; optionally write the run directory.

    A compaction failure (degenerate network) is recorded on the result
    rather than raised, so the trained artefacts always come back.
    """
    data_rng = derive_rng(cfg.seed, _KEY_DATA)
    train_ds, test_ds, extras = build_dataset(cfg.dataset, data_rng)
    if train_ds.input_dim != cfg.dims[0]:
        raise ConfigError(
            f"model.dims: first entry {cfg.dims[0]} != dataset features {train_ds.input_dim}"
        )
    net0 = init_network(derive_rng(cfg.seed, _KEY_INIT), cfg.dims, cfg.activations)
    trained, record = train(net0, train_ds, cfg.loss, cfg.regularizers, cfg.dropout,
                            cfg.train, test_dataset=test_ds)
    pruned = prune(trained, cfg.prune)
    survival = analyze_neurons(pruned)
    report = compression_stats(
        trained, pruned, survival,
        metric_before=evaluate_metric(trained, test_ds),
        metric_after=evaluate_metric(pruned, test_ds),
        metric_kind=test_ds.metric_kind,
    )
    compact_net, index_maps, compact_error = None, None, None
    try:
        compact_net, index_maps = compact(pruned, survival)
    except DegenerateNetworkError as exc:
        compact_error = str(exc)

    result = RunResult(cfg, train_ds, test_ds, extras, trained, pruned, compact_net,
                       index_maps, survival, report, record, compact_error)
    if out_dir is not None:
        write_run_directory(result, out_dir)
    return result


def write_run_directory(result: RunResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    (out / "config.json").write_text(cfg.canonical_json())
    provenance = {
        "config_sha256": cfg.config_hash(),
        "seed": cfg.seed,
        "epochs": cfg.train.epochs,
    }
    save_model(result.dense_net, out / "model_dense.json",
               {**provenance, "stage": "dense"})
    save_model(result.pruned_net, out / "model_pruned.json",
               {**provenance, "stage": "pruned"})
    result.record.to_csv(out / "record.csv")
    (out / "report.txt").write_text(format_report(result.report, cfg.name))
    (out / "report.kv").write_text(machine_report(result.report, cfg.name))
    write_sparsity_images(result.pruned_net, out)
    if result.compact_net is not None:
        save_model(result.compact_net, out / "model_compact.json",
                   {**provenance, "stage": "compacted"},
                   input_columns=result.index_maps[0])
        (out / "index_maps.json").write_text(json.dumps(
            {"stages": [[int(i) for i in m] for m in result.index_maps]},
            sort_keys=True) + "\n")


def evaluate_model(net: Network, meta: dict, ds: datamod.Dataset) -> tuple[float, str]:
    """Metric of a loaded model on a dataset, honouring compacted inputs."""
    x = ds.inputs
    if net.input_dim != ds.input_dim:
        cols = meta.get("input_columns")
        if cols is not None and len(cols) == net.input_dim and max(cols) < ds.input_dim:
            x = ds.inputs[:, cols]
        else:
            raise DimensionError(
                f"model expects {net.input_dim} input features, dataset has {ds.input_dim}"
            )
    y_hat = forward(net, x)
    if ds.metric_kind == "accuracy":
        return accuracy(y_hat, ds.classes), "accuracy"
    return nmse(ds.targets, y_hat), "nmse"


# ---------------------------------------------------------------------------
# multi-trial studies

TRIAL_COLUMNS = [
    "trial", "method", "seed", "status", "metric_kind", "metric_dense",
    "metric_pruned", "input_survivors", "input_total", "hidden_survivors",
    "hidden_total", "output_connected", "output_total", "support_exact",
    "max_product_relerr", "compression_rate", "error",
]


def trial_seed(root_seed: int, trial: int) -> int:
    """The 64-bit seed trial ``trial`` runs under; derived, never sequential."""
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=(_KEY_TRIALS, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _linear_coefficients(net: Network) -> np.ndarray | None:
    """Effective input->output coefficients for an all-linear single-output net."""
    if net.output_dim != 1 or any(l.activation != "linear" for l in net.layers):
        return None
    coeff = net.layers[0].weights
    for layer in net.layers[1:]:
        coeff = coeff @ layer.weights
    return coeff.ravel()


def _outcome_row(trial: int, method: str, seed: int, result: RunResult) -> dict:
    survival = result.survival
    counts = survival.reported_counts()
    hidden = counts[1:-1]
    row = {
        "trial": trial,
        "method": method,
        "seed": seed,
        "status": "ok",
        "metric_kind": result.report.metric_kind,
        "metric_dense": result.metric_dense,
        "metric_pruned": result.metric_pruned,
        "input_survivors": counts[0][0],
        "input_total": counts[0][1],
        "hidden_survivors": sum(k for k, _ in hidden),
        "hidden_total": sum(t for _, t in hidden),
        "output_connected": counts[-1][0],
        "output_total": counts[-1][1],
        "support_exact": "",
        "max_product_relerr": "",
        "compression_rate": result.report.compression_rate,
        "error": "",
    }
    x0 = result.extras.get("x0")
    if x0 is not None:
        support = np.flatnonzero(x0)
        surviving_inputs = np.flatnonzero(survival.survives[0])
        row["support_exact"] = int(np.array_equal(support, surviving_inputs))
        coeff = _linear_coefficients(result.pruned_net)
        if coeff is not None and support.size:
            rel = np.abs(coeff[support] - x0[support]) / np.abs(x0[support])
            row["max_product_relerr"] = float(rel.max())
    return row


def run_one_trial(cfg: ExperimentConfig, trial: int) -> list[dict]:
    """All methods of one trial; shares the trial's data draw across methods."""
    seed = trial_seed(cfg.seed, trial)
    rows = []
    for method in cfg.method_names():
        mcfg = cfg.for_method(method) if cfg.methods else cfg
        try:
            result = run_experiment(mcfg.with_seed(seed))
            rows.append(_outcome_row(trial, method, seed, result))
        except Exception as exc:  # a failed trial is a row, not a crash
            rows.append({**{c: "" for c in TRIAL_COLUMNS}, "trial": trial,
                         "method": method, "seed": seed, "status": "error",
                         "error": f"{type(exc).__name__}: {exc}"})
    return rows


def _trial_worker(args) -> list[dict]:
    doc, trial = args
    return run_one_trial(ExperimentConfig.from_dict(doc), trial)


def run_trials(cfg: ExperimentConfig, n_trials: int, n_jobs: int = 1,
               out_dir=None) -> tuple[list[dict], list[dict]]:
    """n_trials independent runs; returns (rows, summary), ordered by trial."""
    if n_trials < 0:
        raise ArgumentError(f"n_trials must be >= 0, got {n_trials}")
    jobs = [(cfg.to_dict(), t) for t in range(n_trials)]
    if n_jobs > 1 and n_trials > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            per_trial = list(pool.map(_trial_worker, jobs))
    else:
        per_trial = [_trial_worker(job) for job in jobs]
    rows = [row for trial_rows in per_trial for row in trial_rows]
    summary = summarize_trials(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "trials.csv", TRIAL_COLUMNS, rows)
        write_csv(out / "summary.csv", ["method", "stat", "value"], summary)
    return rows, summary


def summarize_trials(rows: list[dict]) -> list[dict]:
    summary = []
    methods = sorted({r["method"] for r in rows})
    for method in methods:
        mine = [r for r in rows if r["method"] == method]
        ok = [r for r in mine if r["status"] == "ok"]
        add = lambda stat, value: summary.append(
            {"method": method, "stat": stat, "value": value})
        add("n_trials", len(mine))
        add("n_ok", len(ok))
        add("n_error", len(mine) - len(ok))
        if not ok:
            continue
        pruned = [r["metric_pruned"] for r in ok]
        add("metric_pruned_median", statistics.median(pruned))
        add("metric_pruned_mean", statistics.fmean(pruned))
        add("metric_dense_median", statistics.median(r["metric_dense"] for r in ok))
        add("frac_all_hidden_survive",
            statistics.fmean(r["hidden_survivors"] == r["hidden_total"] for r in ok))
        supported = [r for r in ok if r["support_exact"] != ""]
        if supported:
            good = [r for r in supported
                    if r["support_exact"] and r["hidden_survivors"] == 1]
            add("frac_one_neuron_support_exact", len(good) / len(supported))
            errs = [r["max_product_relerr"] for r in good
                    if r["max_product_relerr"] != ""]
            if errs:
                add("max_product_relerr_good", max(errs))
    return summary


def write_csv(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v)
                             for k, v in row.items()})
