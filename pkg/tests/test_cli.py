import json

import numpy as np
import pytest

from neurontrim.cli import main

from test_experiments import tiny_config


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(tiny_config()))
    return path


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


class TestTrainCommand:
    def test_train_writes_run_directory(self, tmp_path, config_path, capsys):
        out = tmp_path / "run"
        assert run_cli("train", "--config", config_path, "--out", out) == 0
        printed = capsys.readouterr().out
        assert "compression rate" in printed
        assert (out / "model_pruned.json").exists()
        assert (out / "report.txt").exists()

    def test_train_determinism_across_invocations(self, tmp_path, config_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("train", "--config", config_path, "--out", a) == 0
        assert run_cli("train", "--config", config_path, "--out", b) == 0
        for pa in sorted(a.iterdir()):
            assert pa.read_bytes() == (b / pa.name).read_bytes(), pa.name

    def test_seed_override_changes_results(self, tmp_path, config_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("train", "--config", config_path, "--out", a)
        run_cli("train", "--config", config_path, "--out", b, "--seed", 1)
        assert (a / "model_dense.json").read_bytes() != (b / "model_dense.json").read_bytes()

    def test_missing_config_is_config_error(self, tmp_path):
        assert run_cli("train", "--config", tmp_path / "nope.json", "--out", tmp_path) == 2

    def test_invalid_config_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        doc = tiny_config()
        doc["loss"] = "hinge"
        path.write_text(json.dumps(doc))
        assert run_cli("train", "--config", path, "--out", tmp_path / "r") == 2
        assert "loss" in capsys.readouterr().err

    def test_zero_epoch_run_reports_untrained_metric(self, tmp_path, capsys):
        doc = tiny_config()
        doc["train"]["epochs"] = 0
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(doc))
        assert run_cli("train", "--config", path, "--out", tmp_path / "run") == 0
        record = (tmp_path / "run" / "record.csv").read_text().splitlines()
        assert len(record) == 2  # header plus the epoch-0 row
        metric = float(record[1].split(",")[-1])
        # chance-level NMSE: far from the ~1e-3 a trained model reaches
        assert 0.5 < metric < 3.0

    def test_divergence_exit_code(self, tmp_path):
        doc = tiny_config()
        doc["train"] = {"optimizer": "sgd", "learning_rate": 1e9, "epochs": 3,
                        "batch_size": 1}
        path = tmp_path / "diverge.json"
        path.write_text(json.dumps(doc))
        with np.errstate(over="ignore", invalid="ignore"):
            assert run_cli("train", "--config", path, "--out", tmp_path / "r") == 4


class TestPruneAndCompactCommands:
    def make_run(self, tmp_path, config_path):
        out = tmp_path / "run"
        assert run_cli("train", "--config", config_path, "--out", out) == 0
        return out

    def test_prune_threshold_zero_keeps_metric(self, tmp_path, config_path, capsys):
        run_dir = self.make_run(tmp_path, config_path)
        capsys.readouterr()
        out = tmp_path / "pruned"
        code = run_cli("prune", "--model", run_dir / "model_dense.json",
                       "--threshold", 0, "--out", out, "--config", config_path)
        assert code == 0
        printed = capsys.readouterr().out
        no_prune, pruned = printed.split("no prune ")[1].split("  pruned ")
        assert float(no_prune) == float(pruned.splitlines()[0])

    def test_compact_on_trained_model(self, tmp_path, config_path, capsys):
        run_dir = self.make_run(tmp_path, config_path)
        out = tmp_path / "compacted"
        assert run_cli("compact", "--model", run_dir / "model_pruned.json",
                       "--out", out) == 0
        maps = json.loads((out / "index_maps.json").read_text())
        assert len(maps["stages"]) == 3
        assert "->" in capsys.readouterr().out

    def test_compact_degenerate_exit_code(self, tmp_path, config_path):
        run_dir = self.make_run(tmp_path, config_path)
        zeroed = tmp_path / "zeroed"
        assert run_cli("prune", "--model", run_dir / "model_dense.json",
                       "--threshold", 1e9, "--out", zeroed) == 0
        assert run_cli("compact", "--model", zeroed / "model_pruned.json",
                       "--out", tmp_path / "c") == 5

    def test_compact_remove_dead_outputs_flag(self, tmp_path):
        import numpy as np
        from neurontrim import Layer, Network, save_model

        net = Network([
            Layer(np.array([[1.0, 2.0]]), np.zeros(2), "logistic"),
            Layer(np.array([[1.5, 0.0], [0.5, 0.0]]), np.zeros(2), "linear"),
        ])
        model = tmp_path / "model.json"
        save_model(net, model)
        out_default = tmp_path / "default"
        assert run_cli("compact", "--model", model, "--out", out_default) == 0
        kept, _ = json.loads((out_default / "index_maps.json").read_text())["stages"][-1], None
        assert kept == [0, 1]
        out_trim = tmp_path / "trimmed"
        assert run_cli("compact", "--model", model, "--out", out_trim,
                       "--remove-dead-outputs") == 0
        maps = json.loads((out_trim / "index_maps.json").read_text())["stages"]
        assert maps[-1] == [0]


class TestEvalCommand:
    def test_eval_prints_machine_line(self, tmp_path, config_path, capsys):
        run_dir = tmp_path / "run"
        run_cli("train", "--config", config_path, "--out", run_dir)
        capsys.readouterr()
        assert run_cli("eval", "--model", run_dir / "model_pruned.json",
                       "--config", config_path) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("metric=") and " kind=nmse " in line and " n=30 " in line

    def test_eval_is_deterministic(self, tmp_path, config_path, capsys):
        run_dir = tmp_path / "run"
        run_cli("train", "--config", config_path, "--out", run_dir)
        capsys.readouterr()
        run_cli("eval", "--model", run_dir / "model_pruned.json", "--config", config_path)
        first = capsys.readouterr().out
        run_cli("eval", "--model", run_dir / "model_pruned.json", "--config", config_path)
        assert capsys.readouterr().out == first

    def test_compacted_and_pruned_agree(self, tmp_path, capsys):
        doc = tiny_config(seed=7)
        doc["train"]["epochs"] = 40
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        run_dir = tmp_path / "run"
        run_cli("train", "--config", path, "--out", run_dir)
        capsys.readouterr()
        run_cli("eval", "--model", run_dir / "model_pruned.json", "--config", path)
        pruned = float(capsys.readouterr().out.split()[0].split("=")[1])
        run_cli("eval", "--model", run_dir / "model_compact.json", "--config", path)
        compacted = float(capsys.readouterr().out.split()[0].split("=")[1])
        assert abs(pruned - compacted) <= 1e-12

    def test_width_mismatch_names_both_sizes(self, tmp_path, config_path, capsys):
        run_dir = tmp_path / "run"
        run_cli("train", "--config", config_path, "--out", run_dir)
        other = tmp_path / "other.json"
        doc = tiny_config()
        doc["dataset"]["n_features"] = 9
        doc["model"]["dims"] = [9, 3, 1]
        other.write_text(json.dumps(doc))
        assert run_cli("eval", "--model", run_dir / "model_dense.json",
                       "--config", other) == 3
        err = capsys.readouterr().err
        assert "6" in err and "9" in err


class TestTrialsCommand:
    def test_trials_csv_layout(self, tmp_path, config_path):
        out = tmp_path / "trials"
        assert run_cli("trials", "--config", config_path, "--trials", 2,
                       "--out", out, "--jobs", 2) == 0
        lines = (out / "trials.csv").read_text().splitlines()
        assert lines[0].startswith("trial,method,seed,status")
        assert len(lines) == 3
        assert (out / "summary.csv").exists()

    def test_zero_trials(self, tmp_path, config_path):
        out = tmp_path / "trials"
        assert run_cli("trials", "--config", config_path, "--trials", 0,
                       "--out", out) == 0
        assert len((out / "trials.csv").read_text().splitlines()) == 1


class TestGenDataCommand:
    def test_sparse_regression_csv(self, tmp_path, config_path):
        out = tmp_path / "data"
        assert run_cli("gen-data", "--config", config_path, "--out", out) == 0
        header = (out / "train.csv").read_text().splitlines()[0]
        assert header == "x0,x1,x2,x3,x4,x5,y0"
        assert (out / "test.csv").exists() and (out / "x_true.csv").exists()

    def test_image_corpus(self, tmp_path):
        doc = {
            "schema_version": 1, "name": "digits", "seed": 3,
            "dataset": {"kind": "synthetic_images", "n_train": 12, "n_test": 8,
                         "side": 16, "margin": 2, "task": "reconstruction"},
            "model": {"dims": [256, 4, 256], "activations": "logistic"},
            "loss": "reconstruction_mse",
            "train": {"epochs": 1},
            "prune": {"threshold": 0.01},
        }
        path = tmp_path / "digits.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "corpus"
        assert run_cli("gen-data", "--config", path, "--out", out) == 0
        from neurontrim.data import load_idx_images

        assert load_idx_images(out / "train-images.idx").shape == (12, 16, 16)
        assert load_idx_images(out / "test-images.idx").shape == (8, 16, 16)
