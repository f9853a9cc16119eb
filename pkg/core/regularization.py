"""
Structured Regularization

Group sparsity and sparse group Lasso penalties over neuron groups, and
their closed-form proximal operators.

Penalty per prunable block l with group size P_l:
    (1 - alpha) * lambda_l * sqrt(P_l) * sum_n ||theta_l^n||_2
    + alpha * lambda_l * ||theta_l||_1

alpha = 0 is plain group sparsity. Groups never overlap, so the proximal
map of the whole penalty is the per-group map applied independently.
"""

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from core.errors import ConfigError, DomainError
from core.network.model import Network, ParamBlock
from core.tensor import ensure_finite, l1_norm, l2_norm
from infra.logger import logger_regularizer


# ═══════════════════════════════════════════════════════════════════════════════
# CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

class RegularizerConfig(BaseModel):
    """
    Penalty weights aligned with the prunable blocks of a network.

    The classifier has no entry; it only loses parameters through induced
    removal.
    """
    per_layer_lambda: List[float] = Field(..., description="lambda_l per prunable block")
    alpha: float = Field(default=0.0, ge=0.0, le=1.0, description="l1 / group mixing")
    group_sizes: List[int] = Field(..., description="P_l per prunable block")

    @field_validator("per_layer_lambda")
    @classmethod
    def _non_negative(cls, v):
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise ValueError("lambdas must be finite and non-negative")
        return v

    @field_validator("group_sizes")
    @classmethod
    def _positive(cls, v):
        if any(p < 1 for p in v):
            raise ValueError("group sizes must be >= 1")
        return v

    @model_validator(mode="after")
    def _aligned(self):
        if len(self.per_layer_lambda) != len(self.group_sizes):
            raise ValueError(
                f"{len(self.per_layer_lambda)} lambdas for {len(self.group_sizes)} group sizes"
            )
        return self

    @classmethod
    def for_network(cls, net: Network, lambdas: Sequence[float], alpha: float = 0.0) -> "RegularizerConfig":
        return cls(
            per_layer_lambda=list(lambdas),
            alpha=alpha,
            group_sizes=[b.group_size for b in net.prunable_blocks()],
        )

    @property
    def inactive(self) -> bool:
        return all(lam == 0.0 for lam in self.per_layer_lambda)


def two_tier_lambdas(
    block_count: int,
    first_count: int,
    lambda_first: float,
    lambda_rest: float,
) -> List[float]:
    """lambda_first for the first first_count blocks, lambda_rest for the rest"""
    if block_count < 0 or first_count < 0:
        raise ConfigError("block and prefix counts must be non-negative", "first_layer_count")
    k = min(first_count, block_count)
    return [float(lambda_first)] * k + [float(lambda_rest)] * (block_count - k)


def _check_alignment(blocks: Sequence[ParamBlock], cfg: RegularizerConfig):
    if len(blocks) != len(cfg.per_layer_lambda):
        raise ConfigError(
            f"{len(cfg.per_layer_lambda)} lambdas for {len(blocks)} prunable blocks",
            "per_layer_lambda",
        )
    for block, p in zip(blocks, cfg.group_sizes):
        if block.group_size != p:
            raise ConfigError(f"block {block.key} has P={block.group_size}, config says {p}", "group_sizes")


def _prunable(params) -> List[ParamBlock]:
    if isinstance(params, Network):
        return params.prunable_blocks()
    return [b for b in params if b.prunable]


# ═══════════════════════════════════════════════════════════════════════════════
# PENALTY VALUES
# ═══════════════════════════════════════════════════════════════════════════════

def _group_norm_sum(block: ParamBlock) -> float:
    return math.fsum(l2_norm(block.flat_group(n)) for n in range(block.neuron_count))


def regularizer_value(params, cfg: RegularizerConfig) -> float:
    """
    Exact penalty r(Theta).

    Args:
        params: Network or sequence of ParamBlocks (non-prunable ones ignored)
        cfg: Aligned regularizer configuration

    Returns:
        Non-negative penalty; blocks summed in declaration order
    """
    blocks = _prunable(params)
    _check_alignment(blocks, cfg)
    total = 0.0
    for block, lam, p in zip(blocks, cfg.per_layer_lambda, cfg.group_sizes):
        group_term = (1.0 - cfg.alpha) * lam * math.sqrt(p) * _group_norm_sum(block)
        l1_term = cfg.alpha * lam * l1_norm(block.flat_groups())
        total += group_term + l1_term
    return total


def group_sparsity_value(params, lambdas: Sequence[float]) -> float:
    """Pure group-sparsity penalty (alpha = 0), same summation order"""
    blocks = _prunable(params)
    if len(blocks) != len(lambdas):
        raise ConfigError(f"{len(lambdas)} lambdas for {len(blocks)} prunable blocks", "per_layer_lambda")
    total = 0.0
    for block, lam in zip(blocks, lambdas):
        total += lam * math.sqrt(block.group_size) * _group_norm_sum(block)
    return total


# ═══════════════════════════════════════════════════════════════════════════════
# PROXIMAL OPERATORS
# ═══════════════════════════════════════════════════════════════════════════════

def soft_threshold(z: np.ndarray, tau: float) -> np.ndarray:
    """
    Elementwise sign(z) * max(|z| - tau, 0).

    Entries with |z| <= tau come out as exactly 0.0.
    """
    if tau < 0 or not math.isfinite(tau):
        raise DomainError(f"soft-threshold tau must be finite and >= 0, got {tau}")
    z = np.asarray(z, dtype=np.float64)
    magnitude = np.abs(z)
    return np.where(magnitude > tau, np.sign(z) * (magnitude - tau), 0.0)


def group_threshold(t: float, lambda_l: float, alpha: float, group_size: int) -> float:
    """Clamp threshold t * (1 - alpha) * lambda_l * sqrt(P_l)"""
    return t * (1.0 - alpha) * lambda_l * math.sqrt(group_size)


def _check_prox_args(t: float, lambda_l: float, alpha: float, group_size: int):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"prox step size must be positive, got {t}")
    if lambda_l < 0 or not math.isfinite(lambda_l):
        raise DomainError(f"lambda must be finite and >= 0, got {lambda_l}")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if group_size < 1:
        raise DomainError(f"group size must be >= 1, got {group_size}")


def prox_group(theta_hat: np.ndarray, t: float, lambda_l: float, alpha: float, group_size: int) -> np.ndarray:
    """
    Closed-form proximal update of one flattened neuron group.

    theta = (1 - t(1-alpha)lambda sqrt(P) / ||S||_2)_+ * S,  S = S(theta_hat, t alpha lambda)

    Args:
        theta_hat: Flattened group (weights then bias)
        t: Step size (> 0)
        lambda_l: Penalty weight of the group's block
        alpha: Mixing coefficient in [0, 1]
        group_size: P_l

    Returns:
        New flattened group; exact zeros when the clamp activates or
        when the thresholded vector is zero
    """
    _check_prox_args(t, lambda_l, alpha, group_size)
    theta_hat = ensure_finite(np.asarray(theta_hat, dtype=np.float64), "prox_group")
    shrunk = soft_threshold(theta_hat, t * alpha * lambda_l)
    norm = l2_norm(shrunk)
    threshold = group_threshold(t, lambda_l, alpha, group_size)
    if norm <= threshold:
        return np.zeros_like(theta_hat)
    return (1.0 - threshold / norm) * shrunk


def prox_objective(
    theta: np.ndarray,
    theta_hat: np.ndarray,
    t: float,
    lambda_l: float,
    alpha: float,
    group_size: int,
) -> float:
    """(1/2t)||theta - theta_hat||^2 + this group's share of the penalty"""
    diff = np.asarray(theta, dtype=np.float64) - np.asarray(theta_hat, dtype=np.float64)
    quadratic = l2_norm(diff) ** 2 / (2.0 * t)
    penalty = (1.0 - alpha) * lambda_l * math.sqrt(group_size) * l2_norm(theta) + alpha * lambda_l * l1_norm(theta)
    return quadratic + penalty


def prox_all(params, t: float, cfg: RegularizerConfig) -> Tuple[List[ParamBlock], Dict[str, List[int]]]:
    """
    Apply prox_group to every group of every prunable block.

    Args:
        params: Network or sequence of ParamBlocks
        t: Step size
        cfg: Aligned regularizer configuration

    Returns:
        (updated prunable blocks as new objects, {block key: indices of
        all-zero groups after the update})
    """
    blocks = _prunable(params)
    _check_alignment(blocks, cfg)
    updated, killed = [], {}
    for block, lam, p in zip(blocks, cfg.per_layer_lambda, cfg.group_sizes):
        new_block = block.copy()
        if lam > 0.0:
            for n in range(block.neuron_count):
                new_block.set_flat_group(n, prox_group(block.flat_group(n), t, lam, cfg.alpha, p))
        killed[block.key] = np.flatnonzero(new_block.zero_mask()).tolist()
        updated.append(new_block)

    logger_regularizer.debug(
        f"PROX_ALL | t={t:.6g} | killed={sum(len(v) for v in killed.values())}"
    )
    return updated, killed


def apply_prox(net: Network, t: float, cfg: RegularizerConfig) -> Dict[str, List[int]]:
    """prox_all written back into net in place (the network is touched)"""
    updated, killed = prox_all(net, t, cfg)
    for new_block in updated:
        block = net.block(new_block.key)
        block.weights[...] = new_block.weights
        block.bias[...] = new_block.bias
    net.touch()
    return killed
