"""
Test suite for the command-line interface and exit codes
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

# Add project root to path so we can import from core/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.commands import load_experiment
from app.config import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, OUTPUT_DIR_ENV
from app.runner import FailureType, classify_failure, validation_messages
from core.errors import ConfigError, FormatError, StructuralError
from core.network import count_params, init_network, load_checkpoint, mlp_spec, save_checkpoint
from infra.artifacts import read_json, read_jsonl
from main import main

# Run directories always come from the test configs
os.environ.pop(OUTPUT_DIR_ENV, None)


# ═══════════════════════════════════════════════════════════════════════════════
# HELPERS
# ═══════════════════════════════════════════════════════════════════════════════

def _experiment(output_dir: Path, **overrides) -> dict:
    experiment = {
        "network": {
            "input_shape": [6],
            "layers": [
                {"kind": "dense", "neuron_count": 8},
                {"kind": "relu"},
                {"kind": "dense", "neuron_count": 5},
                {"kind": "relu"},
                {"kind": "classifier", "neuron_count": 3},
            ],
        },
        "training": {"epochs": 2, "batches_per_epoch": 5, "batch_size": 20, "initial_lr": 0.05, "seed": 3},
        "regularizer": {"first_layer_count": 1, "lambda_first": 0.5, "lambda_rest": 0.5},
        "data": {
            "kind": "synthetic",
            "teacher_width": 4,
            "input_dim": 6,
            "classes": 3,
            "n_samples": 400,
            "teacher_seed": 2,
            "validation_count": 100,
        },
        "output_dir": str(output_dir),
        "seed": 5,
        "paired_baseline": True,
    }
    experiment.update(overrides)
    return experiment


def _write_config(folder: Path, name: str, experiment: dict) -> str:
    path = folder / name
    path.write_text(json.dumps(experiment))
    return str(path)


# ═══════════════════════════════════════════════════════════════════════════════
# TRAIN
# ═══════════════════════════════════════════════════════════════════════════════

def test_train_paired():
    """Test the paired train run and its artifacts."""

    print("Testing paired train...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        run = folder / "run"
        config = _write_config(folder, "exp.json", _experiment(run))

        assert main(["train", "--config", config]) == EXIT_OK
        for name in ("checkpoint.bin", "baseline_checkpoint.bin", "pruned.bin",
                     "log.jsonl", "baseline_log.jsonl", "report.json", "report.txt"):
            assert (run / name).exists(), name

        assert len(read_jsonl(run / "log.jsonl")) == 2
        report = read_json(run / "report.json")
        for field in ("neurons_pct", "group_param_pct", "total_param_pct", "total_induced_pct", "accuracy_gap"):
            assert field in report
        assert report["group_zero_params"] <= report["total_zero_params"] <= report["induced_zero_params"]
        assert report["uniform_baseline"] is None
        assert not (run / "uniform_checkpoint.bin").exists()

        trained, metadata = load_checkpoint(run / "checkpoint.bin")
        pruned, pruned_metadata = load_checkpoint(run / "pruned.bin")
        assert metadata["role"] == "regularized" and metadata["seed"] == 5
        assert pruned_metadata["role"] == "compacted"
        assert {k: len(v) for k, v in pruned_metadata["kept"].items()} == pruned.widths()
        assert report["per_layer_neuron_counts"]["layer0"] == [8, pruned.widths()["layer0"]]

    print("✓ paired train tests passed")


def test_train_uniform_baseline():
    """Test the uniformly thinned comparison network of a paired run."""

    print("Testing uniform-width baseline...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        run = folder / "run"
        config = _write_config(folder, "exp.json", _experiment(run, uniform_baseline_scale=0.5))

        assert main(["train", "--config", config]) == EXIT_OK
        for name in ("uniform_checkpoint.bin", "uniform_log.jsonl"):
            assert (run / name).exists(), name

        thin, metadata = load_checkpoint(run / "uniform_checkpoint.bin")
        assert metadata["role"] == "uniform" and metadata["width_scale"] == 0.5
        assert metadata["regularizer"] is None
        assert thin.widths() == {"layer0": 4, "layer2": 3}

        pruned, _ = load_checkpoint(run / "pruned.bin")
        comparison = read_json(run / "report.json")["uniform_baseline"]
        assert comparison["width_scale"] == 0.5
        assert comparison["uniform_params"] == count_params(thin).total
        assert comparison["pruned_params"] == count_params(pruned).total
        assert 0.0 <= comparison["uniform_accuracy"] <= 100.0
        assert "vs uniform x0.5" in (run / "report.txt").read_text()

        # Without pairing there is nothing to compare against
        experiment = _experiment(folder / "unpaired", paired_baseline=False, uniform_baseline_scale=0.5)
        config = _write_config(folder, "unpaired.json", experiment)
        assert main(["train", "--config", config]) == EXIT_USAGE

        for scale in (0, 1.5):
            config = _write_config(folder, "bad.json", _experiment(folder / "bad", uniform_baseline_scale=scale))
            assert main(["train", "--config", config]) == EXIT_USAGE

    print("✓ uniform-width baseline tests passed")


def test_train_deterministic():
    """Test that one config produces the same bytes twice."""

    print("Testing train determinism...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        first = _write_config(folder, "a.json", _experiment(folder / "a", paired_baseline=False))
        second = _write_config(folder, "b.json", _experiment(folder / "b", paired_baseline=False))
        assert main(["train", "--config", first]) == EXIT_OK
        assert main(["train", "--config", second]) == EXIT_OK
        for name in ("checkpoint.bin", "log.jsonl"):
            assert (folder / "a" / name).read_bytes() == (folder / "b" / name).read_bytes()

        # Zero epochs saves the initialization
        experiment = _experiment(folder / "zero", paired_baseline=False)
        experiment["training"]["epochs"] = 0
        config = _write_config(folder, "zero.json", experiment)
        assert main(["train", "--config", config]) == EXIT_OK
        saved, _ = load_checkpoint(folder / "zero" / "checkpoint.bin")
        initial = init_network(saved.spec, 5)
        assert all(np.array_equal(a.weights, b.weights) for a, b in zip(saved.blocks, initial.blocks))
        assert read_jsonl(folder / "zero" / "log.jsonl") == []

    print("✓ train determinism tests passed")


def test_train_usage_errors():
    """Test that bad configs exit with the usage code."""

    print("Testing train usage errors...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        assert main(["train", "--config", str(folder / "absent.json")]) == EXIT_USAGE

        broken = folder / "broken.json"
        broken.write_text("{not json")
        assert main(["train", "--config", str(broken)]) == EXIT_USAGE
        try:
            load_experiment(broken)
            assert False, "expected ConfigError"
        except ConfigError as e:
            assert e.field == "config"

        # Missing CSV file: the offending field is named
        experiment = _experiment(folder / "run")
        experiment["data"] = {"kind": "csv", "csv_path": str(folder / "missing.csv")}
        config = _write_config(folder, "csv.json", experiment)
        assert main(["train", "--config", config]) == EXIT_USAGE
        try:
            load_experiment(config)
            assert False, "expected ValidationError"
        except ValidationError as e:
            fields = [path for path, _ in validation_messages(e)]
            assert "data.csv_path" in fields

        # Impossible schedule
        experiment = _experiment(folder / "run")
        experiment["training"]["lr_drop_epochs"] = [5]
        config = _write_config(folder, "schedule.json", experiment)
        assert main(["train", "--config", config]) == EXIT_USAGE

        assert not (folder / "run" / "checkpoint.bin").exists()

    print("✓ train usage error tests passed")


# ═══════════════════════════════════════════════════════════════════════════════
# PRUNE AND REPORT
# ═══════════════════════════════════════════════════════════════════════════════

def test_prune_and_report():
    """Test the prune and report commands against a trained run."""

    print("Testing prune and report...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        run = folder / "run"
        config = _write_config(folder, "exp.json", _experiment(run))
        assert main(["train", "--config", config]) == EXIT_OK

        out = folder / "again.bin"
        assert main(["prune", "--in", str(run / "checkpoint.bin"), "--out", str(out)]) == EXIT_OK
        assert out.read_bytes() != b""
        again, _ = load_checkpoint(out)
        pruned, _ = load_checkpoint(run / "pruned.bin")
        assert again.widths() == pruned.widths()

        # Same accuracies give the same report as the train command
        original = read_json(run / "report.json")
        metrics = folder / "metrics.json"
        metrics.write_text(json.dumps({"accuracy_regularized": 0.8, "accuracy_baseline": 0.8}))
        report_dir = folder / "report"
        assert main([
            "report",
            "--before", str(run / "checkpoint.bin"),
            "--after", str(run / "pruned.bin"),
            "--metrics", str(metrics),
            "--output-dir", str(report_dir),
        ]) == EXIT_OK
        recomputed = read_json(report_dir / "report.json")
        assert recomputed["accuracy_gap"] == 0.0
        for key in ("neurons_pct", "group_param_pct", "total_param_pct", "total_induced_pct", "flops_after"):
            assert recomputed[key] == original[key]
        assert (report_dir / "report.txt").exists()

        # Accuracies outside [0, 1]
        metrics.write_text(json.dumps({"accuracy_regularized": 80, "accuracy_baseline": 0.8}))
        assert main(["report", "--before", str(run / "checkpoint.bin"), "--after", str(run / "pruned.bin"),
                     "--metrics", str(metrics)]) == EXIT_USAGE

    print("✓ prune and report tests passed")


def test_runtime_failures():
    """Test that library errors exit with the failure code."""

    print("Testing runtime failures...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        a = save_checkpoint(folder / "a.bin", init_network(mlp_spec(4, [6], 2), seed=1))
        b = save_checkpoint(folder / "b.bin", init_network(mlp_spec(4, [6], 3), seed=1))
        metrics = folder / "metrics.json"
        metrics.write_text(json.dumps({"accuracy_regularized": 0.5, "accuracy_baseline": 0.5}))

        # Different spec families
        assert main(["report", "--before", str(a), "--after", str(b), "--metrics", str(metrics)]) == EXIT_FAILURE

        # Corrupted checkpoint
        corrupt = folder / "corrupt.bin"
        data = bytearray(a.read_bytes())
        data[-5] ^= 0xFF
        corrupt.write_bytes(bytes(data))
        assert main(["prune", "--in", str(corrupt), "--out", str(folder / "out.bin")]) == EXIT_FAILURE
        assert not (folder / "out.bin").exists()

        # Severed layer
        dead = init_network(mlp_spec(4, [3], 2), seed=2)
        dead.block("layer0").weights[...] = 0.0
        dead.block("layer0").bias[...] = 0.0
        path = save_checkpoint(folder / "dead.bin", dead)
        assert main(["prune", "--in", str(path), "--out", str(folder / "out.bin")]) == EXIT_FAILURE

    assert classify_failure(FormatError("bad", 0)) is FailureType.RUNTIME
    assert classify_failure(StructuralError("empty", "layer0")) is FailureType.RUNTIME
    assert classify_failure(ConfigError("bad", "data")) is FailureType.USAGE
    assert classify_failure(FileNotFoundError("x")) is FailureType.USAGE

    print("✓ runtime failure tests passed")


# ═══════════════════════════════════════════════════════════════════════════════
# PROX CHECK, SWEEP, ARGUMENTS
# ═══════════════════════════════════════════════════════════════════════════════

def test_prox_check_command():
    """Test prox-check exit codes."""

    print("Testing prox-check command...")

    assert main(["prox-check", "--trials", "20", "--seed", "1"]) == EXIT_OK
    assert main(["prox-check", "--trials", "0"]) == EXIT_USAGE

    print("✓ prox-check command tests passed")


def test_sweep_command():
    """Test the sweep command with explicit pairs."""

    print("Testing sweep command...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        run = folder / "sweep"
        config = _write_config(folder, "exp.json", _experiment(run))
        # identical pairs retrain identically, so the spread is zero
        assert main(["sweep", "--config", config, "--pairs", "0.3,0.3", "0.3,0.3"]) == EXIT_OK
        result = read_json(run / "sweep.json")
        assert len(result["runs"]) == 2
        assert result["accuracy_std"] == 0.0

        # No validation split
        experiment = _experiment(run)
        experiment["data"]["validation_count"] = 0
        config = _write_config(folder, "noval.json", experiment)
        assert main(["sweep", "--config", config, "--pairs", "0.3,0.3"]) == EXIT_USAGE

    print("✓ sweep command tests passed")


def test_argument_errors():
    """Test argparse-level usage errors."""

    print("Testing argument errors...")

    assert main(["train"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["sweep", "--config", "x.json", "--pairs", "0.1"]) == EXIT_USAGE
    assert main(["prox-check", "--trials", "many"]) == EXIT_USAGE

    print("✓ argument error tests passed")


def run_all_tests():
    """Run all test functions."""
    print("\n" + "="*60)
    print("Running CLI Tests")
    print("="*60 + "\n")

    try:
        test_train_paired()
        test_train_uniform_baseline()
        test_train_deterministic()
        test_train_usage_errors()
        test_prune_and_report()
        test_runtime_failures()
        test_prox_check_command()
        test_sweep_command()
        test_argument_errors()

        print("\n" + "="*60)
        print("✅ ALL TESTS PASSED!")
        print("="*60 + "\n")

    except AssertionError as e:
        print("\n" + "="*60)
        print("❌ TEST FAILED!")
        print("="*60)
        print(f"Error: {e}\n")
        raise


if __name__ == "__main__":
    run_all_tests()
