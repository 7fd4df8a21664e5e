"""Command-line interface.

Subcommands: ``train``, ``prune``, ``compact``, ``eval``, ``trials``,
``gen-data``.  Exit codes: 0 success, 2 config error, 3 data error,
4 training divergence, 5 degenerate network, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data as datamod
from .compression import PruneSpec, analyze_neurons, compact, compression_stats, prune
from .errors import (
    ArgumentError,
    ConfigError,
    DataFormatError,
    DegenerateNetworkError,
    DimensionError,
    DivergenceError,
    MetricError,
)
from .experiments import (
    _KEY_DATA,
    ExperimentConfig,
    build_dataset,
    evaluate_model,
    run_experiment,
    run_trials,
)
from .modelio import load_model, save_model
from .numerics import derive_rng
from .reports import format_report, machine_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4
EXIT_DEGENERATE = 5


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.output_dir or f"runs/{cfg.name}"
    result = run_experiment(cfg, out_dir=out)
    print(f"run directory: {out}")
    print(f"metric ({result.report.metric_kind}): no prune "
          f"{result.metric_dense:.6g}  pruned {result.metric_pruned:.6g}")
    print(f"compression rate: {result.report.compression_rate:.6g}")
    if result.compact_error:
        print(f"compaction failed: {result.compact_error}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _cmd_prune(args) -> int:
    net, meta = load_model(args.model)
    pruned = prune(net, PruneSpec(args.threshold))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metric_before = metric_after = float("nan")
    kind = "nmse"
    if args.config:
        cfg = _load_config(args)
        _, test_ds, _ = build_dataset(cfg.dataset, derive_rng(cfg.seed, _KEY_DATA))
        metric_before, kind = evaluate_model(net, meta, test_ds)
        metric_after, _ = evaluate_model(pruned, meta, test_ds)
        print(f"metric ({kind}): no prune {metric_before:.6g}  pruned {metric_after:.6g}")
    report = compression_stats(net, pruned, analyze_neurons(pruned),
                               metric_before, metric_after, kind)
    save_model(pruned, out / "model_pruned.json",
               {**meta.get("provenance", {}), "stage": "pruned"},
               input_columns=meta.get("input_columns"))
    (out / "report.txt").write_text(format_report(report, str(args.model)))
    (out / "report.kv").write_text(machine_report(report, str(args.model)))
    print(f"pruned model and report written to {out}")
    return EXIT_OK


def _cmd_compact(args) -> int:
    net, meta = load_model(args.model)
    small, maps = compact(net, remove_dead_outputs=args.remove_dead_outputs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    original_cols = meta.get("input_columns")
    if original_cols is not None:  # compose with an earlier compaction
        input_columns = [int(original_cols[i]) for i in maps[0]]
    else:
        input_columns = [int(i) for i in maps[0]]
    save_model(small, out / "model_compact.json",
               {**meta.get("provenance", {}), "stage": "compacted"},
               input_columns=input_columns)
    (out / "index_maps.json").write_text(json.dumps(
        {"stages": [[int(i) for i in m] for m in maps]}, sort_keys=True) + "\n")
    print(f"compacted {'-'.join(map(str, net.dims))} -> "
          f"{'-'.join(map(str, small.dims))}; written to {out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    net, meta = load_model(args.model)
    cfg = _load_config(args)
    _, test_ds, _ = build_dataset(cfg.dataset, derive_rng(cfg.seed, _KEY_DATA))
    value, kind = evaluate_model(net, meta, test_ds)
    print(f"metric={value!r} kind={kind} n={len(test_ds)} model={args.model}")
    return EXIT_OK


def _cmd_trials(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.output_dir or f"runs/{cfg.name}-trials"
    rows, summary = run_trials(cfg, args.trials, n_jobs=args.jobs, out_dir=out)
    for item in summary:
        print(f"{item['method']}  {item['stat']} = {item['value']}")
    failed = sum(1 for r in rows if r["status"] != "ok")
    if failed:
        print(f"{failed} trial(s) failed; see {out}/trials.csv", file=sys.stderr)
    print(f"trial table: {out}/trials.csv")
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = cfg.dataset["kind"]
    rng = derive_rng(cfg.seed, _KEY_DATA)
    if kind == "sparse_regression":
        train_ds, test_ds, extras = build_dataset(cfg.dataset, rng)
        datamod.export_csv(train_ds, out / "train.csv")
        datamod.export_csv(test_ds, out / "test.csv")
        with open(out / "x_true.csv", "w") as f:
            f.write("index,value\n")
            for i, v in enumerate(extras["x0"]):
                f.write(f"{i},{v!r}\n")
        print(f"wrote train.csv, test.csv, x_true.csv to {out}")
    elif kind == "synthetic_images":
        ds_cfg = cfg.dataset
        for split, count in (("train", ds_cfg["n_train"]), ("test", ds_cfg["n_test"])):
            ds = datamod.synthetic_digit_images(
                rng, count, side=ds_cfg.get("side", 28), margin=ds_cfg.get("margin", 4))
            images, labels = datamod.dataset_to_idx_arrays(ds)
            datamod.save_idx_images(out / f"{split}-images.idx", images)
            datamod.save_idx_labels(out / f"{split}-labels.idx", labels)
        print(f"wrote {{train,test}}-{{images,labels}}.idx to {out}")
    else:
        raise ConfigError(f"gen-data cannot generate dataset kind {kind!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurontrim",
        description="Train, prune, and compact dense networks with neuron-level "
                    "group sparsity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("train", help="run the full train/prune/compact pipeline")
    common(p)
    p.add_argument("--out", help="run directory (default: config output_dir or runs/<name>)")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("prune", help="threshold-prune a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=1e-2)
    p.add_argument("--out", required=True)
    common(p, config_required=False)
    p.set_defaults(fn=_cmd_prune)

    p = sub.add_parser("compact", help="remove dead neurons from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--remove-dead-outputs", action="store_true",
                   help="also delete disconnected output units (reconstruction tasks)")
    p.set_defaults(fn=_cmd_compact)

    p = sub.add_parser("eval", help="evaluate a saved model on a config's test split")
    p.add_argument("--model", required=True)
    common(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("trials", help="repeat an experiment over independent trials")
    common(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    p.add_argument("--out", help="output directory for trials.csv/summary.csv")
    p.set_defaults(fn=_cmd_trials)

    p = sub.add_parser("gen-data", help="write a config's synthetic dataset to disk")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, DimensionError, MetricError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except DegenerateNetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
