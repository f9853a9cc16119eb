"""
Structural Pruning and Sparsity Accounting

- detect_dead: neurons whose whole group is exactly zero
- compact: delete dead neurons and every downstream connection reading them
- report: neurons / group param / total param / total induced percentages,
  accuracy gap and the analytic cost model
- check_equivalence: compacted vs original outputs on random inputs

Cost model (batch of one): FLOPs = 2 * MACs; feature memory counts
post-activation tensors only; memory figures are bytes of float64 values.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.config import (
    BYTES_PER_VALUE,
    DEAD_EPSILON,
    EQUIVALENCE_INPUTS,
    EQUIVALENCE_TOLERANCE,
    FLOPS_PER_MAC,
)
from core.errors import ContractError, StructuralError
from core.network.model import Network, ParamBlock, count_params
from core.network.propagation import predict
from core.network.spec import LayerSpec, NetworkSpec
from core.tensor import conv_output_length
from infra.logger import log_compaction, logger_pruner


IndexMaps = Dict[str, List[int]]


# ═══════════════════════════════════════════════════════════════════════════════
# DEAD NEURONS
# ═══════════════════════════════════════════════════════════════════════════════

def detect_dead(net: Network, epsilon: float = DEAD_EPSILON) -> Dict[str, List[int]]:
    """
    Dead neuron indices per prunable block.

    A neuron is dead iff every entry of its group, bias included, is
    exactly 0.0 (or within epsilon when inspecting foreign checkpoints).
    """
    return {b.key: np.flatnonzero(b.zero_mask(epsilon)).tolist() for b in net.prunable_blocks()}


# ═══════════════════════════════════════════════════════════════════════════════
# COMPACTION PLAN
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class BlockPlan:
    """Rows kept and fan-in slots (first fan-in axis) kept for one block"""
    rows: np.ndarray
    inputs: np.ndarray


def _flat_columns(keep: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Flattened input columns of the kept channels of a (C, H, W) or (D,) activation"""
    if len(shape) == 1:
        return keep
    spatial = int(np.prod(shape[1:]))
    return (keep[:, None] * spatial + np.arange(spatial)[None, :]).ravel()


def _alive_rows(block: ParamBlock, inputs: np.ndarray, dead: set, epsilon: float) -> np.ndarray:
    """Rows not yet dead whose group restricted to the kept inputs is non-zero"""
    kept_w = np.abs(block.weights[:, inputs].reshape(block.neuron_count, -1))
    kept_b = np.abs(block.bias)
    if epsilon > 0:
        zero = np.all(kept_w <= epsilon, axis=1) & (kept_b <= epsilon)
    else:
        zero = ~np.any(kept_w, axis=1) & (kept_b == 0.0)
    return np.array([n for n in range(block.neuron_count) if n not in dead and not zero[n]], dtype=np.int64)


def _plan_pass(net: Network, dead: Dict[str, set], epsilon: float) -> Dict[str, BlockPlan]:
    spec = net.spec
    shapes = [tuple(spec.input_shape)] + spec.output_shapes()
    keep = np.arange(shapes[0][0])
    plans: Dict[str, BlockPlan] = {}

    for i, layer in enumerate(spec.layers):
        in_shape = shapes[i]
        blocks = net.layer_blocks(i)

        if layer.kind in ("dense", "classifier"):
            (block,) = blocks
            cols = _flat_columns(keep, in_shape)
            if layer.kind == "classifier":
                rows = np.arange(block.neuron_count)
            else:
                rows = _alive_rows(block, cols, dead.get(block.key, set()), epsilon)
            plans[block.key] = BlockPlan(rows, cols)
            keep = rows

        elif layer.kind in ("conv1d_vertical", "conv1d_horizontal"):
            (block,) = blocks
            rows = _alive_rows(block, keep, dead.get(block.key, set()), epsilon)
            plans[block.key] = BlockPlan(rows, keep)
            keep = rows

        elif layer.kind == "decomposed_pair":
            vertical, horizontal = blocks
            v_rows = _alive_rows(vertical, keep, dead.get(vertical.key, set()), epsilon)
            plans[vertical.key] = BlockPlan(v_rows, keep)
            h_rows = _alive_rows(horizontal, v_rows, dead.get(horizontal.key, set()), epsilon)
            plans[horizontal.key] = BlockPlan(h_rows, v_rows)
            keep = h_rows

        for block in blocks:
            if block.prunable and plans[block.key].rows.size == 0:
                raise StructuralError(f"compaction would remove every neuron of {block.key}", block.key)
    return plans


def compaction_plan(net: Network, epsilon: float = DEAD_EPSILON) -> Dict[str, BlockPlan]:
    """
    Kept rows / inputs per block, iterated to a fixed point.

    A surviving neuron whose only non-zero weights read removed channels
    (and whose bias is zero) is output-dead too; it is removed in a
    further pass, which makes compaction idempotent.
    """
    dead = {k: set(v) for k, v in detect_dead(net, epsilon).items()}
    while True:
        plans = _plan_pass(net, dead, epsilon)
        grown = False
        for block in net.prunable_blocks():
            removed = set(range(block.neuron_count)) - set(plans[block.key].rows.tolist())
            if removed - dead[block.key]:
                dead[block.key] |= removed
                grown = True
        if not grown:
            return plans


# ═══════════════════════════════════════════════════════════════════════════════
# COMPACTION
# ═══════════════════════════════════════════════════════════════════════════════

def _resized(layer: LayerSpec, **update) -> LayerSpec:
    return LayerSpec(**{**layer.model_dump(), **update, "input_channels": None})


def compact(net: Network, epsilon: float = DEAD_EPSILON) -> Tuple[Network, IndexMaps]:
    """
    Remove dead neurons and the connections that read them.

    Args:
        net: Network to compact (left untouched)
        epsilon: Dead-detection threshold (exact zero by default)

    Returns:
        (compacted network, {block key: old indices of kept neurons, in new order})

    Raises:
        StructuralError: a prunable block would lose every neuron
    """
    plans = compaction_plan(net, epsilon)

    new_blocks = []
    for block in net.blocks:
        plan = plans[block.key]
        weights = block.weights[plan.rows][:, plan.inputs].copy()
        new_blocks.append(ParamBlock(block.key, weights, block.bias[plan.rows].copy(), block.prunable))

    layers = []
    for i, layer in enumerate(net.spec.layers):
        if layer.kind in ("dense", "conv1d_vertical", "conv1d_horizontal"):
            layers.append(_resized(layer, neuron_count=int(plans[net.layer_blocks(i)[0].key].rows.size)))
        elif layer.kind == "decomposed_pair":
            vertical, horizontal = net.layer_blocks(i)
            layers.append(_resized(
                layer,
                shared_filters=int(plans[vertical.key].rows.size),
                neuron_count=int(plans[horizontal.key].rows.size),
            ))
        else:
            layers.append(_resized(layer))
    spec = NetworkSpec(input_shape=list(net.spec.input_shape), layers=layers, loss=net.spec.loss)

    compacted = Network(spec, new_blocks)
    index_maps = {b.key: plans[b.key].rows.tolist() for b in net.prunable_blocks()}
    log_compaction(
        net.widths(),
        compacted.widths(),
        count_params(net).total - count_params(compacted).total,
    )
    return compacted, index_maps


# ═══════════════════════════════════════════════════════════════════════════════
# EQUIVALENCE
# ═══════════════════════════════════════════════════════════════════════════════

class EquivalenceResult(BaseModel):
    inputs: int
    max_abs_diff: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff <= self.tolerance


def check_equivalence(
    before: Network,
    after: Network,
    inputs: int = EQUIVALENCE_INPUTS,
    tolerance: float = EQUIVALENCE_TOLERANCE,
    seed: int = 0,
) -> EquivalenceResult:
    """Compare predictions of two networks on seeded standard-normal inputs"""
    _require_same_family(before, after)
    x = np.random.default_rng(seed).normal(size=(inputs,) + tuple(before.spec.input_shape))
    diff = float(np.max(np.abs(predict(before, x) - predict(after, x))))
    result = EquivalenceResult(inputs=inputs, max_abs_diff=diff, tolerance=tolerance)
    logger_pruner.info(f"EQUIVALENCE | inputs={inputs} | max_abs_diff={diff:.3e} | passed={result.passed}")
    return result


def _require_same_family(a: Network, b: Network):
    if a.spec.family() != b.spec.family():
        raise ContractError("networks do not share a spec family (layer kinds, geometry, classes)")


# ═══════════════════════════════════════════════════════════════════════════════
# COST MODEL
# ═══════════════════════════════════════════════════════════════════════════════

class LayerCost(BaseModel):
    layer: int
    kind: str
    macs: int
    flops: int
    feature_values: int = Field(..., description="Post-activation values produced")
    params: int


def _dense_cost(layer, in_shape, out_shape, blocks):
    (block,) = blocks
    return block.neuron_count * int(np.prod(block.fan_in_shape)), 0


def _conv_cost(layer, in_shape, out_shape, blocks):
    (block,) = blocks
    per_output = int(np.prod(block.fan_in_shape))
    return per_output * int(np.prod(out_shape)), 0


def _decomposed_cost(layer, in_shape, out_shape, blocks):
    vertical, horizontal = blocks
    c, h, w = in_shape
    h_out = conv_output_length(h, layer.kernel_extent, layer.stride, layer.effective_padding)
    middle = vertical.neuron_count * h_out * w
    macs = int(np.prod(vertical.fan_in_shape)) * middle + int(np.prod(horizontal.fan_in_shape)) * int(np.prod(out_shape))
    return macs, middle + int(np.prod(out_shape))


def _relu_cost(layer, in_shape, out_shape, blocks):
    return 0, int(np.prod(out_shape))


def _pool_cost(layer, in_shape, out_shape, blocks):
    return 0, 0


COST_COUNTERS: Dict[str, Callable] = {
    "dense": _dense_cost,
    "classifier": _dense_cost,
    "conv1d_vertical": _conv_cost,
    "conv1d_horizontal": _conv_cost,
    "decomposed_pair": _decomposed_cost,
    "relu": _relu_cost,
    "max_pool": _pool_cost,
}


def cost_profile(net: Network) -> List[LayerCost]:
    """Per-layer multiply-accumulates, FLOPs, post-activation values and parameters"""
    spec = net.spec
    shapes = [tuple(spec.input_shape)] + spec.output_shapes()
    costs = []
    for i, layer in enumerate(spec.layers):
        blocks = net.layer_blocks(i)
        macs, features = COST_COUNTERS[layer.kind](layer, shapes[i], shapes[i + 1], blocks)
        costs.append(LayerCost(
            layer=i,
            kind=layer.kind,
            macs=macs,
            flops=FLOPS_PER_MAC * macs,
            feature_values=features,
            params=sum(b.param_count for b in blocks),
        ))
    return costs


# ═══════════════════════════════════════════════════════════════════════════════
# SPARSITY REPORT
# ═══════════════════════════════════════════════════════════════════════════════

class WidthComparison(BaseModel):
    """Compacted network against a uniformly thinned one trained without the penalty"""
    width_scale: float
    pruned_params: int
    uniform_params: int
    pruned_flops: int
    uniform_flops: int
    pruned_accuracy: float = Field(..., description="Percent")
    uniform_accuracy: float = Field(..., description="Percent")


class SparsityReport(BaseModel):
    """Accounting of one (regularized, compacted) network pair"""
    neurons_pct: float
    group_param_pct: float
    total_param_pct: float
    total_induced_pct: float
    per_layer_neuron_counts: Dict[str, Tuple[int, int]]
    accuracy_gap: float = Field(..., description="Regularized minus baseline accuracy, percentage points")
    flops_before: int
    flops_after: int
    feature_memory_before: int
    feature_memory_after: int
    param_memory_before: int
    param_memory_after: int

    zeroed_neurons: int
    total_neurons: int
    group_zero_params: int
    total_zero_params: int
    induced_zero_params: int
    prunable_params: int
    induced_denominator: int
    removed_params: int

    uniform_baseline: Optional[WidthComparison] = None


def _pct(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


def _deleted_mask(block: ParamBlock, plan: BlockPlan) -> np.ndarray:
    """(N, P) mask over flattened groups of the entries compaction deletes"""
    mask = np.ones((block.neuron_count, block.group_size), dtype=bool)
    slot = int(np.prod(block.fan_in_shape[1:]))
    kept_cols = (plan.inputs[:, None] * slot + np.arange(slot)[None, :]).ravel()
    kept = np.zeros(block.group_size, dtype=bool)
    kept[kept_cols] = True
    kept[-1] = True
    mask[plan.rows] = ~kept
    return mask


def report(
    net_before: Network,
    net_after: Network,
    acc_regularized: float,
    acc_baseline: float,
    epsilon: float = DEAD_EPSILON,
) -> SparsityReport:
    """
    Sparsity accounting of a trained network and its compacted form.

    Args:
        net_before: Regularized network before compaction
        net_after: Its compacted form
        acc_regularized: Top-1 accuracy of the regularized network, in [0, 1]
        acc_baseline: Top-1 accuracy of the lambda = 0 baseline, in [0, 1]

    Returns:
        SparsityReport. Percentages over prunable (non-classifier) blocks;
        total_induced additionally counts classifier entries deleted by
        compaction over a denominator that includes the classifier.

    Raises:
        ContractError: the networks are not of one spec family
    """
    _require_same_family(net_before, net_after)
    plans = compaction_plan(net_before, epsilon)

    dead = detect_dead(net_before, epsilon)
    zeroed_neurons = sum(len(v) for v in dead.values())
    total_neurons = sum(b.neuron_count for b in net_before.prunable_blocks())

    group_zero = total_zero = induced_zero = removed = 0
    for block in net_before.prunable_blocks():
        flat = block.flat_groups()
        zero_entries = (np.abs(flat) <= epsilon) if epsilon > 0 else (flat == 0.0)
        dead_rows = dead[block.key]
        group_zero += len(dead_rows) * block.group_size
        total_zero += int(zero_entries.sum())
        deleted = _deleted_mask(block, plans[block.key])
        induced_zero += int((zero_entries | deleted).sum())
        removed += int(deleted.sum())

    classifier = net_before.classifier_block()
    classifier_deleted = int(_deleted_mask(classifier, plans[classifier.key]).sum())
    induced_zero += classifier_deleted
    removed += classifier_deleted

    counts = count_params(net_before)
    after_counts = count_params(net_after)
    if counts.total - after_counts.total != removed:
        logger_pruner.warning(
            f"REPORT_MISMATCH | expected_removed={removed} | "
            f"observed_removed={counts.total - after_counts.total}"
        )

    costs_before, costs_after = cost_profile(net_before), cost_profile(net_after)
    widths_after = net_after.widths()

    result = SparsityReport(
        neurons_pct=_pct(zeroed_neurons, total_neurons),
        group_param_pct=_pct(group_zero, counts.prunable),
        total_param_pct=_pct(total_zero, counts.prunable),
        total_induced_pct=_pct(induced_zero, counts.total),
        per_layer_neuron_counts={
            key: (width, widths_after.get(key, 0)) for key, width in net_before.widths().items()
        },
        accuracy_gap=100.0 * (acc_regularized - acc_baseline),
        flops_before=sum(c.flops for c in costs_before),
        flops_after=sum(c.flops for c in costs_after),
        feature_memory_before=BYTES_PER_VALUE * sum(c.feature_values for c in costs_before),
        feature_memory_after=BYTES_PER_VALUE * sum(c.feature_values for c in costs_after),
        param_memory_before=BYTES_PER_VALUE * counts.total,
        param_memory_after=BYTES_PER_VALUE * after_counts.total,
        zeroed_neurons=zeroed_neurons,
        total_neurons=total_neurons,
        group_zero_params=group_zero,
        total_zero_params=total_zero,
        induced_zero_params=induced_zero,
        prunable_params=counts.prunable,
        induced_denominator=counts.total,
        removed_params=removed,
    )
    logger_pruner.info(
        f"REPORT | neurons={result.neurons_pct:.2f} | group_param={result.group_param_pct:.2f} | "
        f"total_param={result.total_param_pct:.2f} | total_induced={result.total_induced_pct:.2f} | "
        f"accuracy_gap={result.accuracy_gap:.2f}"
    )
    return result


def compare_widths(
    pruned: Network,
    uniform: Network,
    acc_pruned: float,
    acc_uniform: float,
    width_scale: float,
) -> WidthComparison:
    """
    Size, cost and accuracy of the compacted network next to a network of
    the same family whose hidden widths were scaled by width_scale up front.

    Raises:
        ContractError: the networks are not of one spec family
    """
    _require_same_family(pruned, uniform)
    result = WidthComparison(
        width_scale=width_scale,
        pruned_params=count_params(pruned).total,
        uniform_params=count_params(uniform).total,
        pruned_flops=sum(c.flops for c in cost_profile(pruned)),
        uniform_flops=sum(c.flops for c in cost_profile(uniform)),
        pruned_accuracy=100.0 * acc_pruned,
        uniform_accuracy=100.0 * acc_uniform,
    )
    logger_pruner.info(
        f"WIDTH_COMPARISON | scale={width_scale} | pruned_params={result.pruned_params} | "
        f"uniform_params={result.uniform_params} | pruned_acc={result.pruned_accuracy:.2f} | "
        f"uniform_acc={result.uniform_accuracy:.2f}"
    )
    return result


# ═══════════════════════════════════════════════════════════════════════════════
# TEXT RENDERING
# ═══════════════════════════════════════════════════════════════════════════════

REPORT_ROWS = [
    ("neurons", "neurons_pct"),
    ("group param", "group_param_pct"),
    ("total param", "total_param_pct"),
    ("total induced", "total_induced_pct"),
    ("accuracy gap", "accuracy_gap"),
]


def render_report_table(result: SparsityReport) -> str:
    """Aligned plain-text table in the conventional row order"""
    lines = ["metric           value (%)"]
    for label, field in REPORT_ROWS:
        lines.append(f"{label:<16} {getattr(result, field):>9.2f}")

    lines.append("")
    lines.append(f"{'block':<20} {'before':>8} {'after':>8}")
    for key, (before, after) in result.per_layer_neuron_counts.items():
        lines.append(f"{key:<20} {before:>8d} {after:>8d}")

    lines.append("")
    lines.append(f"{'cost':<20} {'before':>14} {'after':>14}")
    for label, before, after in [
        ("flops", result.flops_before, result.flops_after),
        ("feature memory (B)", result.feature_memory_before, result.feature_memory_after),
        ("param memory (B)", result.param_memory_before, result.param_memory_after),
    ]:
        lines.append(f"{label:<20} {before:>14d} {after:>14d}")

    uniform = result.uniform_baseline
    if uniform is not None:
        lines.append("")
        lines.append(f"{'vs uniform x' + format(uniform.width_scale, 'g'):<20} {'pruned':>14} {'uniform':>14}")
        lines.append(f"{'params':<20} {uniform.pruned_params:>14d} {uniform.uniform_params:>14d}")
        lines.append(f"{'flops':<20} {uniform.pruned_flops:>14d} {uniform.uniform_flops:>14d}")
        lines.append(f"{'accuracy (%)':<20} {uniform.pruned_accuracy:>14.2f} {uniform.uniform_accuracy:>14.2f}")
    return "\n".join(lines) + "\n"
