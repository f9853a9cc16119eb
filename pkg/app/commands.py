"""
Command Handlers

Each handler takes its validated input schema and returns an exit code.
Failures are raised as GSPruneError subclasses and classified by
app.runner.
"""

import json
from pathlib import Path
from typing import List, Optional, Tuple

from app.config import EXIT_FAILURE, EXIT_OK, REPORT_JSON_FILE, REPORT_TEXT_FILE, SWEEP_MAX_ACCURACY_STD
from app.schemas import (
    DataSource,
    ExperimentConfig,
    ProxCheckInput,
    PruneInput,
    RegularizerSettings,
    ReportInput,
    ReportMetrics,
    SweepInput,
    TrainInput,
)
from core.data import Dataset, load_csv, load_idx, split_dataset, synth_teacher_student
from core.errors import ConfigError
from core.network.checkpoint import load_checkpoint, save_checkpoint
from core.network.model import init_network
from core.network.presets import scale_widths
from core.prox_oracle import run_prox_check
from core.pruner import check_equivalence, compact, compare_widths, render_report_table, report
from core.trainer import evaluate, sensitivity_sweep, train
from infra.artifacts import RunDirectory, read_json, write_json, write_text
from infra.env import resolve_output_dir
from infra import ui


# Default sweep: the configured pair and weaker multiples down to a quarter
SWEEP_SCALES = (0.25, 0.375, 0.5, 0.75, 1.0)


# ═══════════════════════════════════════════════════════════════════════════════
# LOADING
# ═══════════════════════════════════════════════════════════════════════════════

def load_experiment(path) -> ExperimentConfig:
    """
    Parse and validate an experiment JSON.

    Raises:
        ConfigError: not valid JSON
        ValidationError: field-level schema violations
    """
    try:
        raw = read_json(path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON ({e.msg}, line {e.lineno})", "config") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object", "config")
    return ExperimentConfig(**raw)


def load_data(source: DataSource) -> Tuple[Dataset, Optional[Dataset]]:
    """(train, validation); validation is None when validation_count is 0"""
    if source.kind == "idx":
        dataset = load_idx(source.images_path, source.labels_path, source.class_count)
    elif source.kind == "csv":
        dataset = load_csv(source.csv_path, source.class_count)
    else:
        dataset, _ = synth_teacher_student(
            source.teacher_seed,
            source.teacher_width,
            source.input_dim,
            source.classes,
            source.n_samples,
        )
    if source.validation_count == 0:
        return dataset, None
    return split_dataset(dataset, source.validation_count, source.split_seed)


def _check_data_fits(exp: ExperimentConfig, data: Dataset):
    if list(data.sample_shape) != list(exp.network.input_shape):
        raise ConfigError(
            f"samples have shape {list(data.sample_shape)}, network expects {exp.network.input_shape}",
            "network.input_shape",
        )
    if data.class_count != exp.network.class_count:
        raise ConfigError(
            f"data has {data.class_count} classes, classifier has {exp.network.class_count}",
            "network.layers",
        )


def _metadata(exp: ExperimentConfig, role: str, regularizer: Optional[RegularizerSettings]) -> dict:
    return {
        "role": role,
        "seed": exp.seed,
        "training_seed": exp.training.seed,
        "epoch": exp.training.epochs,
        "regularizer": None if regularizer is None else regularizer.model_dump(),
    }


# ═══════════════════════════════════════════════════════════════════════════════
# TRAIN
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_train(inp: TrainInput) -> int:
    """
    Train the regularized network; in paired mode also the lambda = 0
    baseline from the same initialization, the compacted network and the
    sparsity report.

    Writes into the run directory:
        checkpoint.bin, log.jsonl
        baseline_checkpoint.bin, baseline_log.jsonl, pruned.bin,
        report.json, report.txt (paired mode)
        uniform_checkpoint.bin, uniform_log.jsonl (uniform_baseline_scale set)
    """
    exp = load_experiment(inp.config)
    run = RunDirectory(resolve_output_dir(exp.output_dir))
    data, validation = load_data(exp.data)
    _check_data_fits(exp, data)

    initial = init_network(exp.network, exp.seed)
    rcfg = exp.regularizer.build(initial)

    trained, log = train(initial, data, exp.training, rcfg, validation, run_dir=run, log_path=run.log)
    save_checkpoint(run.checkpoint, trained, _metadata(exp, "regularized", exp.regularizer))
    ui.print_training_summary("regularized", log)

    if not exp.paired_baseline:
        return EXIT_OK

    baseline, baseline_log = train(initial, data, exp.training, None, validation, log_path=run.baseline_log)
    save_checkpoint(run.baseline_checkpoint, baseline, _metadata(exp, "baseline", None))
    ui.print_training_summary("baseline", baseline_log)

    pruned, index_maps = compact(trained)
    save_checkpoint(run.pruned_checkpoint, pruned, {**_metadata(exp, "compacted", exp.regularizer), "kept": index_maps})

    eval_set = validation if validation is not None else data
    accuracy = evaluate(trained, eval_set)
    result = report(trained, pruned, accuracy, evaluate(baseline, eval_set))

    scale = exp.uniform_baseline_scale
    if scale is not None:
        thin_initial = init_network(scale_widths(exp.network, scale), exp.seed)
        thin, thin_log = train(thin_initial, data, exp.training, None, validation, log_path=run.uniform_log)
        save_checkpoint(run.uniform_checkpoint, thin, {**_metadata(exp, "uniform", None), "width_scale": scale})
        ui.print_training_summary("uniform", thin_log)
        result.uniform_baseline = compare_widths(pruned, thin, accuracy, evaluate(thin, eval_set), scale)

    write_json(run.report_json, result.model_dump())
    write_text(run.report_text, render_report_table(result))
    ui.print_report(result)
    return EXIT_OK


# ═══════════════════════════════════════════════════════════════════════════════
# PRUNE
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_prune(inp: PruneInput) -> int:
    """Compact a checkpoint, verify output equivalence, print width changes"""
    net, metadata = load_checkpoint(inp.input_path)
    pruned, index_maps = compact(net)
    save_checkpoint(inp.output_path, pruned, {**metadata, "role": "compacted", "kept": index_maps})

    ui.print_width_changes(net.widths(), pruned.widths())
    equivalence = check_equivalence(net, pruned)
    ui.print_equivalence(equivalence)
    return EXIT_OK if equivalence.passed else EXIT_FAILURE


# ═══════════════════════════════════════════════════════════════════════════════
# REPORT
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_report(inp: ReportInput) -> int:
    """Sparsity report of a checkpoint pair from externally measured accuracies"""
    before, _ = load_checkpoint(inp.before)
    after, _ = load_checkpoint(inp.after)
    metrics = ReportMetrics(**read_json(inp.metrics))

    result = report(before, after, metrics.accuracy_regularized, metrics.accuracy_baseline)
    out_dir = Path(inp.output_dir) if inp.output_dir is not None else Path(inp.after).parent
    write_json(out_dir / REPORT_JSON_FILE, result.model_dump())
    write_text(out_dir / REPORT_TEXT_FILE, render_report_table(result))
    ui.print_report(result)
    return EXIT_OK


# ═══════════════════════════════════════════════════════════════════════════════
# PROX CHECK
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_prox_check(inp: ProxCheckInput) -> int:
    result = run_prox_check(inp.trials, inp.seed)
    ui.print_prox_check(result)
    return EXIT_OK if result.passed else EXIT_FAILURE


# ═══════════════════════════════════════════════════════════════════════════════
# SWEEP
# ═══════════════════════════════════════════════════════════════════════════════

def default_sweep_pairs(settings: RegularizerSettings) -> List[Tuple[float, float]]:
    return [(s * settings.lambda_first, s * settings.lambda_rest) for s in SWEEP_SCALES]


def cmd_sweep(inp: SweepInput) -> int:
    """
    Retrain over several lambda pairs; fails when the validation accuracy
    spread exceeds SWEEP_MAX_ACCURACY_STD percentage points.
    """
    exp = load_experiment(inp.config)
    data, validation = load_data(exp.data)
    if validation is None:
        raise ConfigError("a sweep needs a validation split", "data.validation_count")
    _check_data_fits(exp, data)

    pairs = inp.pairs or default_sweep_pairs(exp.regularizer)
    result = sensitivity_sweep(
        exp.network,
        exp.seed,
        data,
        validation,
        exp.training,
        pairs,
        exp.regularizer.first_layer_count,
        exp.regularizer.alpha,
    )
    run = RunDirectory(resolve_output_dir(exp.output_dir))
    write_json(run.sweep_json, result.model_dump())
    ui.print_sweep(result)

    stable = result.accuracy_std <= SWEEP_MAX_ACCURACY_STD
    ui.print_status("sensitivity", stable, f"std {result.accuracy_std:.2f} <= {SWEEP_MAX_ACCURACY_STD}")
    return EXIT_OK if stable else EXIT_FAILURE
