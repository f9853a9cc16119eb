"""
Console Output

Rich rendering of command results: tables, width changes and
PASS/FAIL lines. Logging goes to stderr; everything here goes to stdout.
"""

from typing import Dict, Iterable, Tuple

from rich.console import Console
from rich.table import Table

from core.prox_oracle import ProxCheckResult
from core.pruner import EquivalenceResult, REPORT_ROWS, SparsityReport
from core.trainer import SweepResult, TrainingLog


console = Console()


# ═══════════════════════════════════════════════════════════════════════════════
# STATUS LINES
# ═══════════════════════════════════════════════════════════════════════════════

def print_status(label: str, passed: bool, detail: str = ""):
    """Print 'label: PASS (detail)' in green or red"""
    status = "[bold green]PASS[/]" if passed else "[bold red]FAIL[/]"
    suffix = f" ({detail})" if detail else ""
    console.print(f"{label}: {status}{suffix}")


def print_error(message: str):
    console.print(f"[bold red]error:[/] {message}", highlight=False)


def print_validation_errors(errors: Iterable[Tuple[str, str]]):
    """Field-level messages, one per line"""
    for field, message in errors:
        console.print(f"[bold red]invalid[/] [cyan]{field}[/]: {message}", highlight=False)


# ═══════════════════════════════════════════════════════════════════════════════
# TABLES
# ═══════════════════════════════════════════════════════════════════════════════

def print_report(result: SparsityReport):
    """Metric rows, per-block widths and the cost block"""
    metrics = Table(title="Sparsity report")
    metrics.add_column("metric")
    metrics.add_column("value (%)", justify="right")
    for label, field in REPORT_ROWS:
        metrics.add_row(label, f"{getattr(result, field):.2f}")
    console.print(metrics)

    print_width_changes({k: v[0] for k, v in result.per_layer_neuron_counts.items()},
                        {k: v[1] for k, v in result.per_layer_neuron_counts.items()})

    costs = Table(title="Cost")
    costs.add_column("quantity")
    costs.add_column("before", justify="right")
    costs.add_column("after", justify="right")
    costs.add_row("flops", str(result.flops_before), str(result.flops_after))
    costs.add_row("feature memory (B)", str(result.feature_memory_before), str(result.feature_memory_after))
    costs.add_row("param memory (B)", str(result.param_memory_before), str(result.param_memory_after))
    console.print(costs)

    uniform = result.uniform_baseline
    if uniform is not None:
        versus = Table(title=f"Compacted vs uniform width x{uniform.width_scale:g}")
        versus.add_column("quantity")
        versus.add_column("compacted", justify="right")
        versus.add_column("uniform", justify="right")
        versus.add_row("params", str(uniform.pruned_params), str(uniform.uniform_params))
        versus.add_row("flops", str(uniform.pruned_flops), str(uniform.uniform_flops))
        versus.add_row("accuracy (%)", f"{uniform.pruned_accuracy:.2f}", f"{uniform.uniform_accuracy:.2f}")
        console.print(versus)


def print_width_changes(before: Dict[str, int], after: Dict[str, int]):
    table = Table(title="Neurons per block")
    table.add_column("block")
    table.add_column("before", justify="right")
    table.add_column("after", justify="right")
    table.add_column("removed", justify="right")
    for key, width in before.items():
        kept = after.get(key, 0)
        table.add_row(key, str(width), str(kept), str(width - kept))
    console.print(table)


def print_equivalence(result: EquivalenceResult):
    print_status(
        "equivalence",
        result.passed,
        f"max |diff| {result.max_abs_diff:.3e} over {result.inputs} inputs, tol {result.tolerance:.0e}",
    )


def print_prox_check(result: ProxCheckResult):
    console.print(f"trials: {result.trials}  seed: {result.seed}  duration: {result.duration_seconds:.2f}s")
    console.print(f"max parameter deviation: {result.max_param_deviation:.3e}")
    console.print(f"max objective excess:    {result.max_objective_excess:.3e}")
    console.print(f"kill-criterion cases:    {result.boundary_cases} ({result.kill_mismatches} mismatches)")
    print_status("prox-check", result.passed, f"tolerance {result.tolerance:.0e}")


def print_training_summary(label: str, log: TrainingLog):
    if not log.records:
        console.print(f"{label}: no epochs run")
        return
    last = log.records[-1]
    val = "-" if last.validation_accuracy is None else f"{100.0 * last.validation_accuracy:.2f}%"
    console.print(
        f"{label}: epoch {last.epoch}  loss {last.loss:.4f}  "
        f"train {100.0 * last.train_accuracy:.2f}%  val {val}  zeroed {sum(last.zeroed.values())}"
    )


def print_sweep(result: SweepResult):
    table = Table(title="Lambda sensitivity")
    table.add_column("lambda_first", justify="right")
    table.add_column("lambda_rest", justify="right")
    table.add_column("val acc (%)", justify="right")
    table.add_column("zeroed (%)", justify="right")
    for run in result.runs:
        table.add_row(
            f"{run.lambda_first:g}",
            f"{run.lambda_rest:g}",
            f"{run.validation_accuracy:.2f}",
            f"{run.zeroed_pct:.2f}",
        )
    console.print(table)
    console.print(f"val acc mean {result.accuracy_mean:.2f}  std {result.accuracy_std:.2f}")
    console.print(f"zeroed  mean {result.zeroed_mean:.2f}  std {result.zeroed_std:.2f}")
