"""
Test suite for dead-neuron detection, compaction and sparsity reports
"""

import sys
from pathlib import Path

import numpy as np

# Add project root to path so we can import from core/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import ContractError, StructuralError
from core.network import LayerSpec, NetworkSpec, count_params, dec3_spec, init_network, mlp_spec
from core.pruner import (
    REPORT_ROWS,
    check_equivalence,
    compact,
    compare_widths,
    cost_profile,
    detect_dead,
    render_report_table,
    report,
)


# ═══════════════════════════════════════════════════════════════════════════════
# HELPERS
# ═══════════════════════════════════════════════════════════════════════════════

def _kill(net, key, rows):
    block = net.block(key)
    block.weights[rows] = 0.0
    block.bias[rows] = 0.0
    net.touch()


def _random_family(rng: np.random.Generator, index: int):
    family = index % 3
    if family == 0:
        return mlp_spec(int(rng.integers(3, 7)), [int(rng.integers(3, 9)), int(rng.integers(3, 9))], 3)
    if family == 1:
        return dec3_spec([1, 8, 8], [int(rng.integers(2, 5)) for _ in range(3)], int(rng.integers(2, 4)), 3, 4)
    return NetworkSpec(input_shape=[2, 6, 6], layers=[
        LayerSpec(kind="conv1d_vertical", neuron_count=int(rng.integers(2, 5)), kernel_extent=3),
        LayerSpec(kind="relu"),
        LayerSpec(kind="conv1d_horizontal", neuron_count=int(rng.integers(2, 5)), kernel_extent=3, stride=2),
        LayerSpec(kind="relu"),
        LayerSpec(kind="max_pool", pool_size=3),
        LayerSpec(kind="classifier", neuron_count=3),
    ])


def _zero_random_groups(net, rng: np.random.Generator):
    """Zero a random strict subset of every prunable block"""
    for block in net.prunable_blocks():
        count = int(rng.integers(0, block.neuron_count))
        rows = rng.choice(block.neuron_count, size=count, replace=False).tolist()
        if rows:
            _kill(net, block.key, rows)


def _fixture():
    """One hidden layer of 10 neurons (P = 5) feeding a 10 -> 2 classifier, neurons 0-4 dead"""
    net = init_network(mlp_spec(4, [10], 2), seed=21)
    _kill(net, "layer0", [0, 1, 2, 3, 4])
    return net


# ═══════════════════════════════════════════════════════════════════════════════
# DETECTION AND COMPACTION
# ═══════════════════════════════════════════════════════════════════════════════

def test_detect_dead():
    """Test exact-zero dead detection."""

    print("Testing detect_dead...")

    net = init_network(mlp_spec(4, [8, 8], 3), seed=1)
    assert detect_dead(net) == {"layer0": [], "layer2": []}

    _kill(net, "layer2", [1, 5])
    assert detect_dead(net) == {"layer0": [], "layer2": [1, 5]}

    # A tiny but non-zero bias keeps a neuron alive unless an epsilon is given
    net.block("layer0").weights[3] = 0.0
    net.block("layer0").bias[3] = 1e-12
    assert detect_dead(net)["layer0"] == []
    assert detect_dead(net, epsilon=1e-9)["layer0"] == [3]

    print("✓ detect_dead tests passed")


def test_compact_basic():
    """Test no-op compaction and a single removed neuron."""

    print("Testing basic compaction...")

    net = init_network(mlp_spec(4, [10], 2), seed=2)
    same, maps = compact(net)
    assert same.widths() == net.widths()
    assert maps == {"layer0": list(range(10))}
    assert all(np.array_equal(a.weights, b.weights) for a, b in zip(net.blocks, same.blocks))

    _kill(net, "layer0", [0])
    smaller, maps = compact(net)
    assert smaller.widths() == {"layer0": 9}
    assert maps == {"layer0": list(range(1, 10))}
    assert np.array_equal(smaller.classifier_block().weights, net.classifier_block().weights[:, 1:])
    assert np.array_equal(smaller.block("layer0").weights, net.block("layer0").weights[1:])
    assert count_params(net).total - count_params(smaller).total == 5 + 2

    # The input network keeps its shape
    assert net.widths() == {"layer0": 10}

    print("✓ basic compaction tests passed")


def test_compact_cascade():
    """Test that neurons reading only removed channels are removed too."""

    print("Testing cascaded removal...")

    net = init_network(mlp_spec(3, [4, 3], 2), seed=3)
    _kill(net, "layer0", [0, 1])
    # layer2 neuron 2 only reads the two dead inputs and has no bias
    block = net.block("layer2")
    block.weights[2] = [0.7, -0.4, 0.0, 0.0]
    block.bias[2] = 0.0
    net.touch()

    smaller, maps = compact(net)
    assert maps == {"layer0": [2, 3], "layer2": [0, 1]}
    assert check_equivalence(net, smaller).passed

    print("✓ cascaded removal tests passed")


def test_compact_decomposed():
    """Test removal of shared vertical filters inside a decomposed pair."""

    print("Testing decomposed compaction...")

    net = init_network(dec3_spec([1, 8, 8], [3, 3, 3], 3, 3, 4), seed=4)
    _kill(net, "layer0.vertical", [1])
    _kill(net, "layer2.horizontal", [0, 2])

    smaller, maps = compact(net)
    assert smaller.widths()["layer0.vertical"] == 2
    assert smaller.widths()["layer2.horizontal"] == 1
    assert smaller.block("layer0.horizontal").weights.shape == (3, 2, 3)
    assert smaller.block("layer4.vertical").weights.shape == (3, 1, 3)
    assert smaller.spec.layers[0].shared_filters == 2
    assert check_equivalence(net, smaller).passed

    print("✓ decomposed compaction tests passed")


def test_output_equivalence():
    """Test compaction on 20 random networks with random dead groups."""

    print("Testing output equivalence...")

    rng = np.random.default_rng(5)
    for index in range(20):
        net = init_network(_random_family(rng, index), seed=int(rng.integers(2**31)))
        _zero_random_groups(net, rng)
        smaller, _ = compact(net)
        result = check_equivalence(net, smaller, inputs=100, seed=index)
        assert result.passed, f"net {index}: max diff {result.max_abs_diff}"

        # Idempotence
        again, maps = compact(smaller)
        assert again.widths() == smaller.widths()
        assert all(rows == list(range(len(rows))) for rows in maps.values())
        assert all(np.array_equal(a.weights, b.weights) for a, b in zip(again.blocks, smaller.blocks))

    print("✓ output equivalence tests passed")


def test_structural_error():
    """Test that severing a layer is refused."""

    print("Testing structural errors...")

    net = init_network(mlp_spec(4, [3, 3], 2), seed=6)
    _kill(net, "layer2", [0, 1, 2])
    try:
        compact(net)
        assert False, "expected StructuralError"
    except StructuralError as e:
        assert e.layer == "layer2"
        assert "layer2" in str(e)

    print("✓ structural error tests passed")


# ═══════════════════════════════════════════════════════════════════════════════
# REPORT
# ═══════════════════════════════════════════════════════════════════════════════

def test_report_fixture():
    """Test the hand-computed four-metric fixture."""

    print("Testing report fixture...")

    net = _fixture()
    smaller, _ = compact(net)
    result = report(net, smaller, acc_regularized=0.91, acc_baseline=0.925)

    assert result.neurons_pct == 50.0
    assert result.group_param_pct == 50.0
    assert result.total_param_pct == 50.0
    # 25 dead-group entries + 10 classifier weights over 50 + 22 parameters
    assert abs(result.total_induced_pct - 100.0 * 35 / 72) <= 1e-12
    assert abs(result.accuracy_gap - (-1.5)) <= 1e-9
    assert result.per_layer_neuron_counts == {"layer0": (10, 5)}
    assert result.removed_params == 35
    assert count_params(net).total - count_params(smaller).total == result.removed_params

    # Cost model: 4->10 dense, ReLU, 10->2 classifier
    assert result.flops_before == 2 * (40 + 20)
    assert result.flops_after == 2 * (20 + 10)
    assert result.feature_memory_before == 8 * 10
    assert result.feature_memory_after == 8 * 5
    assert result.param_memory_before == 8 * 72
    assert result.param_memory_after == 8 * 37

    print("✓ report fixture tests passed")


def test_report_properties():
    """Test empty reports, the metric chain and conservation."""

    print("Testing report properties...")

    net = init_network(mlp_spec(4, [6, 5], 3), seed=7)
    result = report(net, compact(net)[0], 0.8, 0.8)
    assert result.neurons_pct == result.group_param_pct == result.total_param_pct == 0.0
    assert result.total_induced_pct == 0.0 and result.accuracy_gap == 0.0

    rng = np.random.default_rng(8)
    for index in range(10):
        net = init_network(_random_family(rng, index), seed=index)
        _zero_random_groups(net, rng)
        # within-group zeros in surviving groups
        for block in net.prunable_blocks():
            flat = block.weights.reshape(-1)
            flat[rng.choice(flat.size, size=flat.size // 5, replace=False)] = 0.0
        net.touch()

        smaller, _ = compact(net)
        result = report(net, smaller, 0.5, 0.5)
        assert result.group_param_pct <= result.total_param_pct
        # the induced denominator includes the classifier, so the chain holds on counts
        assert result.group_zero_params <= result.total_zero_params <= result.induced_zero_params
        assert result.induced_denominator == result.prunable_params + count_params(net).classifier
        assert all(0.0 <= getattr(result, f) <= 100.0 for _, f in REPORT_ROWS[:4])
        assert count_params(net).total - count_params(smaller).total == result.removed_params
        dead = detect_dead(net)
        assert result.zeroed_neurons == sum(len(v) for v in dead.values())

    print("✓ report property tests passed")


def test_cost_profile():
    """Test per-layer multiply-accumulate counts."""

    print("Testing cost profile...")

    costs = cost_profile(init_network(mlp_spec(4, [10], 2)))
    assert [c.macs for c in costs] == [40, 0, 20]
    assert [c.flops for c in costs] == [80, 0, 40]
    assert [c.params for c in costs] == [50, 0, 22]
    assert costs[1].feature_values == 10

    # Decomposed pair on [1, 8, 8], L = 2, F = 3, d = 3, stride 1
    spec = NetworkSpec(input_shape=[1, 8, 8], layers=[
        LayerSpec(kind="decomposed_pair", neuron_count=3, shared_filters=2, kernel_extent=3),
        LayerSpec(kind="classifier", neuron_count=2),
    ])
    costs = cost_profile(init_network(spec))
    assert costs[0].macs == 3 * (2 * 8 * 8) + 6 * (3 * 8 * 8)
    assert costs[0].feature_values == 2 * 64 + 3 * 64
    assert costs[1].macs == 2 * 192

    print("✓ cost profile tests passed")


def test_family_mismatch_and_rendering():
    """Test contract errors and the text table."""

    print("Testing family checks and rendering...")

    a = init_network(mlp_spec(4, [10], 2))
    b = init_network(mlp_spec(4, [10], 3))
    for fn in (lambda: report(a, b, 0.5, 0.5), lambda: check_equivalence(a, b)):
        try:
            fn()
            assert False, "expected ContractError"
        except ContractError:
            pass

    net = _fixture()
    text = render_report_table(report(net, compact(net)[0], 0.9, 0.9))
    positions = [text.index(label) for label, _ in REPORT_ROWS]
    assert positions == sorted(positions)
    assert "48.61" in text
    assert "layer0" in text

    print("✓ family check and rendering tests passed")


def test_compare_widths():
    """Test the compacted-vs-uniformly-thinned comparison."""

    print("Testing width comparison...")

    wide = init_network(mlp_spec(4, [10], 2))
    thin = init_network(mlp_spec(4, [10], 2, width_scale=0.5))
    comparison = compare_widths(wide, thin, 0.9, 0.85, 0.5)
    assert (comparison.pruned_params, comparison.uniform_params) == (72, 37)
    assert (comparison.pruned_flops, comparison.uniform_flops) == (120, 60)
    assert abs(comparison.pruned_accuracy - 90.0) < 1e-9
    assert abs(comparison.uniform_accuracy - 85.0) < 1e-9

    try:
        compare_widths(wide, init_network(mlp_spec(4, [5], 3)), 0.9, 0.85, 0.5)
        assert False, "expected ContractError"
    except ContractError:
        pass

    net = _fixture()
    result = report(net, compact(net)[0], 0.9, 0.9)
    assert "vs uniform" not in render_report_table(result)
    result.uniform_baseline = comparison
    text = render_report_table(result)
    assert "vs uniform x0.5" in text
    assert text.index("vs uniform") > text.index("param memory")

    print("✓ width comparison tests passed")


def run_all_tests():
    """Run all test functions."""
    print("\n" + "="*60)
    print("Running Pruner Tests")
    print("="*60 + "\n")

    try:
        test_detect_dead()
        test_compact_basic()
        test_compact_cascade()
        test_compact_decomposed()
        test_output_equivalence()
        test_structural_error()
        test_report_fixture()
        test_report_properties()
        test_cost_profile()
        test_family_mismatch_and_rendering()
        test_compare_widths()

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
