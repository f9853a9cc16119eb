"""
Test suite for the numerical proximal oracle and the prox-check harness
"""

import os
import sys
from pathlib import Path

import numpy as np

# Add project root to path so we can import from core/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.config import PROX_CHECK_DEFAULT_TRIALS, PROX_PARAM_TOLERANCE, SLOW_TESTS_ENV
from core.errors import DomainError
from core.prox_oracle import check_kill_criterion, refine_prox_solution, run_prox_check, solve_prox_numerically
from core.regularization import prox_group
from core.tensor import l2_norm


def test_oracle_agrees_on_examples():
    """Test the solver against hand-computed proximal points."""

    print("Testing oracle on known cases...")

    out = solve_prox_numerically(np.array([3.0, 4.0]), 1.0, 1.25, 0.0, 4)
    assert np.max(np.abs(out - [1.5, 2.0])) <= PROX_PARAM_TOLERANCE

    out = solve_prox_numerically(np.array([0.6, 0.8]), 1.0, 1.0, 0.0, 4)
    assert np.max(np.abs(out)) <= PROX_PARAM_TOLERANCE

    hat = np.array([0.9, -1.7, 0.2, 0.05, -0.4])
    for alpha in (0.25, 0.5, 1.0):
        closed = prox_group(hat, 0.3, 0.8, alpha, 5)
        numeric = solve_prox_numerically(hat, 0.3, 0.8, alpha, 5)
        assert np.max(np.abs(closed - numeric)) <= PROX_PARAM_TOLERANCE

    try:
        solve_prox_numerically(hat, 0.0, 0.8, 0.5, 5)
        assert False, "expected DomainError"
    except DomainError:
        pass

    print("✓ oracle example tests passed")


def test_refinement_recovers_minimizer():
    """Test the Newton polish from perturbed, empty and boundary starts."""

    print("Testing oracle refinement...")

    rng = np.random.default_rng(2)
    alphas = (0.0, 0.25, 0.5, 1.0)
    for i in range(60):
        size = 1 + i % 8
        alpha = alphas[i % 4]
        hat = rng.normal(0.0, 2.0, size)
        t, lam = float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.0, 1.5))
        closed = prox_group(hat, t, lam, alpha, size)

        start = closed + rng.normal(0.0, 1e-4, size)
        refined = refine_prox_solution(hat, t, lam, alpha, size, start)
        assert np.max(np.abs(refined - closed)) <= 1e-9, (i, refined, closed)

        from_origin = refine_prox_solution(hat, t, lam, alpha, size, np.zeros(size))
        assert np.max(np.abs(from_origin - closed)) <= 1e-9, (i, from_origin, closed)

    # alpha = 0 groups a relative 1e-9 either side of the kill threshold
    for side in (-1.0, 1.0):
        for _ in range(20):
            size = int(rng.integers(1, 9))
            hat = rng.normal(0.0, 1.0, size)
            t = float(rng.uniform(0.01, 1.0))
            lam = l2_norm(hat) / (t * np.sqrt(size)) * (1.0 + side * 1e-9)
            closed = prox_group(hat, t, lam, 0.0, size)
            numeric = solve_prox_numerically(hat, t, lam, 0.0, size)
            assert np.max(np.abs(numeric - closed)) <= PROX_PARAM_TOLERANCE

    print("✓ oracle refinement tests passed")


def test_prox_check():
    """Test the randomized comparison harness."""

    print("Testing prox check...")

    result = run_prox_check(trials=1, seed=0)
    assert result.passed and result.trials == 1

    result = run_prox_check(trials=100, seed=3)
    assert result.passed, result.model_dump()
    assert result.max_param_deviation <= PROX_PARAM_TOLERANCE
    assert result.kill_mismatches == 0
    assert result.boundary_cases == 100

    # Same seed, same verdict
    again = run_prox_check(trials=100, seed=3)
    assert again.max_param_deviation == result.max_param_deviation

    for trials in (0, -5):
        try:
            run_prox_check(trials=trials, seed=0)
            assert False, "expected DomainError"
        except DomainError:
            pass

    print("✓ prox check tests passed")


def test_kill_criterion_boundaries():
    """Test instances 1e-9 either side of the kill threshold."""

    print("Testing kill criterion boundaries...")

    assert check_kill_criterion(np.random.default_rng(11), 1000) == 0

    print("✓ kill criterion boundary tests passed")


def test_full_prox_check():
    """Test the default-size check (slow; set GSPRUNE_SLOW_TESTS=1)."""

    if not os.getenv(SLOW_TESTS_ENV):
        print("Skipping full prox check (slow)")
        return

    print("Testing full prox check...")

    result = run_prox_check(trials=PROX_CHECK_DEFAULT_TRIALS, seed=0)
    assert result.passed, result.model_dump()

    print("✓ full prox check passed")


def run_all_tests():
    """Run all test functions."""
    print("\n" + "="*60)
    print("Running Prox Oracle Tests")
    print("="*60 + "\n")

    try:
        test_oracle_agrees_on_examples()
        test_refinement_recovers_minimizer()
        test_prox_check()
        test_kill_criterion_boundaries()
        test_full_prox_check()

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
