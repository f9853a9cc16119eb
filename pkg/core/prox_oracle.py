"""
Proximal Operator Oracle

Independent numerical minimization of the per-group proximal subproblem

    min_theta (1/2t)||theta - theta_hat||^2
              + (1 - alpha) lambda sqrt(P) ||theta||_2 + alpha lambda ||theta||_1

Multiplied through by t, the subproblem is 1-strongly convex:

    min_theta 1/2 ||theta - theta_hat||^2 + g ||theta||_2 + a ||theta||_1
    g = t (1 - alpha) lambda sqrt(P),  a = t alpha lambda

A conic interior-point solve gives a starting point; an active-set Newton
polish on the optimality conditions takes it to machine precision. The
randomized comparison harness behind the prox-check command lives here too.
"""

import time
from functools import lru_cache
from typing import Optional, Tuple

import cvxpy as cp
import numpy as np
from pydantic import BaseModel, Field

from app.config import (
    PROX_CHECK_ALPHAS,
    PROX_CHECK_MAX_GROUP_SIZE,
    PROX_OBJECTIVE_TOLERANCE,
    PROX_PARAM_TOLERANCE,
)
from core.errors import DomainError
from core.regularization import group_threshold, prox_group, prox_objective
from core.tensor import l2_norm
from infra.logger import LogContext, logger_regularizer


# Interior-point accuracy for the oracle
SOLVER_TOLERANCE: float = 1e-12
SOLVER_MAX_ITER: int = 300

# Newton polish
SUPPORT_TOLERANCE: float = 1e-9
NEWTON_MAX_ITER: int = 100
NEWTON_GRAD_TOLERANCE: float = 1e-14
NEWTON_ZERO_NORM: float = 1e-14
ACTIVE_SET_ROUNDS: int = 20

# Relative offset used to straddle the kill threshold
BOUNDARY_OFFSET: float = 1e-9

_ACCEPTED_STATUSES = {cp.OPTIMAL, cp.OPTIMAL_INACCURATE}


# ═══════════════════════════════════════════════════════════════════════════════
# CONIC SOLVE
# ═══════════════════════════════════════════════════════════════════════════════

@lru_cache(maxsize=None)
def _subproblem(size: int):
    """Parametrized (DPP) problem for one group size, compiled once"""
    theta = cp.Variable(size)
    theta_hat = cp.Parameter(size)
    group_weight = cp.Parameter(nonneg=True)
    l1_weight = cp.Parameter(nonneg=True)
    objective = (
        0.5 * cp.sum_squares(theta - theta_hat)
        + group_weight * cp.norm2(theta)
        + l1_weight * cp.norm1(theta)
    )
    problem = cp.Problem(cp.Minimize(objective))
    return problem, theta, theta_hat, group_weight, l1_weight


def _solver_kwargs() -> dict:
    if cp.CLARABEL in cp.installed_solvers():
        return {
            "solver": cp.CLARABEL,
            "tol_gap_abs": SOLVER_TOLERANCE,
            "tol_gap_rel": SOLVER_TOLERANCE,
            "tol_feas": SOLVER_TOLERANCE,
            "max_iter": SOLVER_MAX_ITER,
        }
    return {}


def _folded_weights(t: float, lambda_l: float, alpha: float, group_size: int) -> Tuple[float, float]:
    if not t > 0:
        raise DomainError(f"prox step size must be positive, got {t}")
    return t * (1.0 - alpha) * lambda_l * np.sqrt(group_size), t * alpha * lambda_l


def _folded_objective(theta: np.ndarray, theta_hat: np.ndarray, g: float, a: float) -> float:
    diff = theta - theta_hat
    return 0.5 * float(diff @ diff) + g * float(np.sqrt(theta @ theta)) + a * float(np.sum(np.abs(theta)))


def _conic_solve(theta_hat: np.ndarray, g: float, a: float) -> np.ndarray:
    problem, theta, hat, group_weight, l1_weight = _subproblem(theta_hat.size)
    hat.value = theta_hat
    group_weight.value = g
    l1_weight.value = a
    problem.solve(**_solver_kwargs())
    if problem.status not in _ACCEPTED_STATUSES:
        raise DomainError(f"prox oracle solver ended with status {problem.status}")
    return np.asarray(theta.value, dtype=np.float64)


# ═══════════════════════════════════════════════════════════════════════════════
# NEWTON POLISH
# ═══════════════════════════════════════════════════════════════════════════════

def _newton_on_support(c: np.ndarray, g: float, start: np.ndarray) -> Optional[np.ndarray]:
    """
    Minimize 1/2 ||y - c||^2 + g ||y|| away from y = 0 with damped Newton steps.

    Returns None when the iterates collapse onto the origin (no stationary
    point with y != 0).
    """
    scale = max(float(np.sqrt(c @ c)), 1.0)

    def value(y):
        d = y - c
        return 0.5 * float(d @ d) + g * float(np.sqrt(y @ y))

    y = start.copy()
    for _ in range(NEWTON_MAX_ITER):
        r = float(np.sqrt(y @ y))
        if r <= NEWTON_ZERO_NORM * scale:
            return None
        grad = y - c + g * y / r
        if float(np.sqrt(grad @ grad)) <= NEWTON_GRAD_TOLERANCE * scale:
            break
        hessian = (1.0 + g / r) * np.eye(y.size) - g * np.outer(y, y) / r**3
        step = np.linalg.solve(hessian, grad)

        current, slope, s = value(y), float(grad @ step), 1.0
        while value(y - s * step) > current - 1e-4 * s * slope and s > 1e-12:
            s *= 0.5
        y = y - s * step
    return y


def refine_prox_solution(
    theta_hat: np.ndarray,
    t: float,
    lambda_l: float,
    alpha: float,
    group_size: int,
    start: np.ndarray,
) -> np.ndarray:
    """
    Polish an approximate minimizer of the proximal subproblem.

    Guesses the support from `start`, minimizes the smooth restricted
    objective with Newton's method, then drops coordinates whose sign
    disagrees with theta_hat and adds zero coordinates that violate
    |theta_hat_i| <= a, until the support is stable. The best of the
    polished point, the origin and `start` is returned.
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    start = np.asarray(start, dtype=np.float64)
    g, a = _folded_weights(t, lambda_l, alpha, group_size)
    sign = np.sign(theta_hat)

    support = np.abs(start) > SUPPORT_TOLERANCE * max(l2_norm(theta_hat), 1.0)
    guess = np.where(support, start, 0.0)
    polished = None
    for _ in range(ACTIVE_SET_ROUNDS):
        y = None
        if support.any():
            c = theta_hat[support] - a * sign[support]
            y = _newton_on_support(c, g, guess[support])
        if y is None:
            # Collapse on a partial support: retry with the coordinates left out
            missing = ~support & (np.abs(theta_hat) > a)
            if not missing.any():
                break
            support |= missing
            guess = np.where(missing, theta_hat - a * sign, guess)
            continue
        candidate = np.zeros_like(theta_hat)
        candidate[support] = y

        flipped = support & (candidate * sign <= 0.0)
        if flipped.any():
            support &= ~flipped
            guess = np.where(support, candidate, 0.0)
            continue
        violators = ~support & (np.abs(theta_hat) > a)
        if violators.any():
            support |= violators
            guess = np.where(violators, theta_hat - a * sign, candidate)
            continue
        polished = candidate
        break

    candidates = [np.zeros_like(theta_hat), start]
    if polished is not None:
        candidates.insert(0, polished)
    values = [_folded_objective(x, theta_hat, g, a) for x in candidates]
    return candidates[int(np.argmin(values))]


def solve_prox_numerically(
    theta_hat: np.ndarray,
    t: float,
    lambda_l: float,
    alpha: float,
    group_size: int,
) -> np.ndarray:
    """
    Minimize the proximal subproblem: cvxpy solve, then Newton polish.

    Returns:
        The numerical minimizer (not thresholded; coordinates the polish
        cannot decide stay as the solver reports them)
    """
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    g, a = _folded_weights(t, lambda_l, alpha, group_size)
    start = _conic_solve(theta_hat, g, a)
    return refine_prox_solution(theta_hat, t, lambda_l, alpha, group_size, start)


# ═══════════════════════════════════════════════════════════════════════════════
# INSTANCE GENERATION
# ═══════════════════════════════════════════════════════════════════════════════

def _random_instance(rng: np.random.Generator) -> Tuple[np.ndarray, float, float, int]:
    size = int(rng.integers(1, PROX_CHECK_MAX_GROUP_SIZE + 1))
    theta_hat = rng.normal(0.0, 1.0, size) * rng.uniform(0.1, 3.0)
    t = float(rng.uniform(0.01, 1.0))
    lambda_l = float(rng.uniform(0.0, 2.0))
    return theta_hat, t, lambda_l, size


def _boundary_instance(rng: np.random.Generator, alpha: float, side: int) -> Tuple[np.ndarray, float, float, int]:
    """
    Instance sitting a relative 1e-9 below (side < 0) or above (side > 0)
    the lambda at which the group is first zeroed.
    """
    theta_hat, t, _, size = _random_instance(rng)
    if alpha == 0.0:
        lambda_l = l2_norm(theta_hat) / (t * np.sqrt(size))
    elif alpha >= 1.0:
        # pure l1: the largest entry sits on the soft-threshold edge
        lambda_l = float(np.max(np.abs(theta_hat))) / (t * alpha)
    else:
        lambda_l = _boundary_lambda(theta_hat, t, alpha, size)
    return theta_hat, t, lambda_l * (1.0 + side * BOUNDARY_OFFSET), size


def _boundary_lambda(theta_hat: np.ndarray, t: float, alpha: float, size: int) -> float:
    """Bisection for lambda where ||S(theta_hat, t alpha lambda)|| equals the clamp threshold"""

    def gap(lam: float) -> float:
        shrunk = np.maximum(np.abs(theta_hat) - t * alpha * lam, 0.0)
        return l2_norm(shrunk) - group_threshold(t, lam, alpha, size)

    lo, hi = 0.0, 1.0
    while gap(hi) > 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


# ═══════════════════════════════════════════════════════════════════════════════
# CHECK HARNESS
# ═══════════════════════════════════════════════════════════════════════════════

class ProxCheckResult(BaseModel):
    """Outcome of the closed form vs numerical minimizer comparison"""
    trials: int
    seed: int
    tolerance: float
    max_param_deviation: float = Field(..., description="max ||closed - oracle||_inf")
    max_objective_excess: float = Field(..., description="max (closed objective - oracle objective)")
    boundary_cases: int = Field(..., description="alpha = 0 kill-criterion instances checked")
    kill_mismatches: int = Field(..., description="boundary instances killed on the wrong side")
    duration_seconds: float

    @property
    def passed(self) -> bool:
        return (
            self.max_param_deviation <= self.tolerance
            and self.max_objective_excess <= PROX_OBJECTIVE_TOLERANCE
            and self.kill_mismatches == 0
        )


def check_kill_criterion(rng: np.random.Generator, cases: int) -> int:
    """
    Alpha = 0 instances straddling ||theta_hat|| = t lambda sqrt(P).

    Returns:
        Number of instances where the zero/non-zero outcome disagrees
        with the criterion
    """
    mismatches = 0
    for i in range(cases):
        side = -1 if i % 2 == 0 else 1
        theta_hat, t, lambda_l, size = _boundary_instance(rng, 0.0, side)
        out = prox_group(theta_hat, t, lambda_l, 0.0, size)
        should_kill = side > 0
        if bool(not np.any(out)) != should_kill:
            mismatches += 1
    return mismatches


def run_prox_check(
    trials: int,
    seed: int,
    tolerance: float = PROX_PARAM_TOLERANCE,
) -> ProxCheckResult:
    """
    Compare prox_group against the numerical minimizer.

    Every fourth oracle instance (starting with the first) sits on a clamp
    boundary; alphas cycle through the configured set. An alpha = 0
    kill-criterion suite of the same size runs alongside.

    Args:
        trials: Number of oracle instances (>= 1)
        seed: RNG seed
        tolerance: Allowed max-abs parameter deviation

    Returns:
        ProxCheckResult
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    start = time.time()
    rng = np.random.default_rng(seed)
    alphas = list(PROX_CHECK_ALPHAS)

    max_dev, max_excess = 0.0, -np.inf
    for i in range(trials):
        alpha = alphas[i % len(alphas)]
        if i % 4 == 0:
            theta_hat, t, lambda_l, size = _boundary_instance(rng, alpha, 1 if (i // 4) % 2 else -1)
        else:
            theta_hat, t, lambda_l, size = _random_instance(rng)

        closed = prox_group(theta_hat, t, lambda_l, alpha, size)
        oracle = solve_prox_numerically(theta_hat, t, lambda_l, alpha, size)
        max_dev = max(max_dev, float(np.max(np.abs(closed - oracle))))
        excess = (
            prox_objective(closed, theta_hat, t, lambda_l, alpha, size)
            - prox_objective(oracle, theta_hat, t, lambda_l, alpha, size)
        )
        max_excess = max(max_excess, excess)

    mismatches = check_kill_criterion(rng, trials)
    result = ProxCheckResult(
        trials=trials,
        seed=seed,
        tolerance=tolerance,
        max_param_deviation=max_dev,
        max_objective_excess=float(max_excess),
        boundary_cases=trials,
        kill_mismatches=mismatches,
        duration_seconds=time.time() - start,
    )

    logger_regularizer.info(
        "PROX_CHECK | " + LogContext.format_dict({
            "trials": trials,
            "seed": seed,
            "max_dev": f"{max_dev:.3e}",
            "max_excess": f"{max_excess:.3e}",
            "kill_mismatches": mismatches,
            "passed": result.passed,
        })
    )
    return result
