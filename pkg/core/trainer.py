"""
Proximal Training Loop

Mini-batch momentum SGD on the data loss, followed at every epoch end by
one proximal pass over all neuron groups with step size equal to the
current learning rate.

Flow per epoch:
    1. batches_per_epoch momentum-SGD steps (loss gradient only)
    2. prox pass; groups that come out exactly zero are frozen
    3. evaluation and one log record
"""

import math
import statistics
import time
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_BATCHES_PER_EPOCH,
    DEFAULT_FREEZE_KILLED,
    DEFAULT_INITIAL_LR,
    DEFAULT_LR_DROP_FACTOR,
    DEFAULT_MOMENTUM,
    DEFAULT_WEIGHT_DECAY,
    DIVERGENCE_LOSS_LIMIT,
    EVAL_CHUNK_SIZE,
)
from core.data import Dataset
from core.errors import DomainError, TrainingDivergedError
from core.network.checkpoint import save_checkpoint
from core.network.model import Network, ParamBlock, init_network
from core.network.propagation import backward, forward, loss_and_grad, predict
from core.network.spec import NetworkSpec
from core.regularization import RegularizerConfig, apply_prox, regularizer_value, two_tier_lambdas
from infra.artifacts import RunDirectory, append_jsonl, write_jsonl
from infra.logger import (
    log_batch,
    log_epoch_complete,
    log_prox_pass,
    log_training_complete,
    log_training_start,
    logger_trainer,
)


# ═══════════════════════════════════════════════════════════════════════════════
# CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

class TrainingConfig(BaseModel):
    """SGD schedule and the switches around the proximal pass"""
    epochs: int = Field(..., ge=0, description="Number of epochs (0 returns the initialization)")
    batches_per_epoch: int = Field(default=DEFAULT_BATCHES_PER_EPOCH, ge=1)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)
    initial_lr: float = Field(default=DEFAULT_INITIAL_LR, ge=0.0)
    lr_drop_epochs: List[int] = Field(default_factory=list, description="1-based epochs at which lr drops")
    lr_drop_factor: float = Field(default=DEFAULT_LR_DROP_FACTOR, gt=0.0, lt=1.0)
    momentum: float = Field(default=DEFAULT_MOMENTUM, ge=0.0, lt=1.0)
    seed: int = 0
    weight_decay: float = Field(default=DEFAULT_WEIGHT_DECAY, ge=0.0)
    freeze_killed: bool = Field(default=DEFAULT_FREEZE_KILLED, description="Suppress updates of zeroed groups")
    proximal: bool = Field(default=True, description="Run the prox pass at epoch ends")
    checkpoint_every: int = Field(default=0, ge=0, description="Periodic checkpoint interval in epochs (0 = off)")

    @model_validator(mode="after")
    def _check_schedule(self):
        drops = self.lr_drop_epochs
        if any(b <= a for a, b in zip(drops, drops[1:])):
            raise ValueError("lr_drop_epochs must be strictly increasing")
        if drops and (drops[0] < 1 or drops[-1] > self.epochs):
            raise ValueError(f"lr_drop_epochs must lie within [1, {self.epochs}]")
        return self


def learning_rate_at(tcfg: TrainingConfig, epoch: int) -> float:
    """Step schedule: initial_lr * factor^(number of drop epochs <= epoch)"""
    drops = sum(1 for d in tcfg.lr_drop_epochs if d <= epoch)
    return tcfg.initial_lr * tcfg.lr_drop_factor ** drops


# ═══════════════════════════════════════════════════════════════════════════════
# LOG
# ═══════════════════════════════════════════════════════════════════════════════

class EpochRecord(BaseModel):
    epoch: int
    loss: float
    train_accuracy: float
    validation_accuracy: Optional[float] = None
    train_val_gap: Optional[float] = None
    regularizer_value: float
    zeroed: Dict[str, int]
    frozen_groups: int
    learning_rate: float


class TrainingLog(BaseModel):
    records: List[EpochRecord] = Field(default_factory=list)
    final_killed: Dict[str, List[int]] = Field(default_factory=dict)

    def to_entries(self) -> List[dict]:
        return [r.model_dump() for r in self.records]


# ═══════════════════════════════════════════════════════════════════════════════
# OPTIMIZER
# ═══════════════════════════════════════════════════════════════════════════════

class MomentumSGD:
    """
    Classical momentum: v <- mu v - lr g ; theta <- theta + v.

    Frozen groups (block key -> neuron rows) get zero gradient and zero
    velocity, so they stay exactly where the prox left them.
    """

    def __init__(self, net: Network, momentum: float, weight_decay: float = 0.0):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity: Dict[str, ParamBlock] = {b.key: b.zeros_like() for b in net.blocks}
        self.frozen: Dict[str, Set[int]] = {}

    def freeze(self, killed: Dict[str, List[int]]):
        for key, rows in killed.items():
            if not rows:
                continue
            self.frozen.setdefault(key, set()).update(rows)
            v = self.velocity[key]
            v.weights[rows] = 0.0
            v.bias[rows] = 0.0

    @property
    def frozen_count(self) -> int:
        return sum(len(rows) for rows in self.frozen.values())

    def step(self, net: Network, grads: List[ParamBlock], lr: float):
        for block, grad in zip(net.blocks, grads):
            grad_w, grad_b = grad.weights, grad.bias
            if self.weight_decay:
                grad_w = grad_w + self.weight_decay * block.weights
            rows = sorted(self.frozen.get(block.key, ()))
            if rows:
                grad_w = grad_w.copy()
                grad_b = grad_b.copy()
                grad_w[rows] = 0.0
                grad_b[rows] = 0.0
            v = self.velocity[block.key]
            v.weights = self.momentum * v.weights - lr * grad_w
            v.bias = self.momentum * v.bias - lr * grad_b
            block.weights += v.weights
            block.bias += v.bias
        net.touch()


# ═══════════════════════════════════════════════════════════════════════════════
# EVALUATION
# ═══════════════════════════════════════════════════════════════════════════════

def evaluate(net: Network, data: Dataset) -> float:
    """Top-1 accuracy in [0, 1]"""
    if len(data) == 0:
        raise DomainError("cannot evaluate on an empty dataset")
    correct = 0
    for start in range(0, len(data), EVAL_CHUNK_SIZE):
        logits = predict(net, data.inputs[start:start + EVAL_CHUNK_SIZE])
        correct += int(np.sum(np.argmax(logits, axis=1) == data.labels[start:start + EVAL_CHUNK_SIZE]))
    return correct / len(data)


def zeroed_counts(net: Network) -> Dict[str, int]:
    return {b.key: int(np.sum(b.zero_mask())) for b in net.prunable_blocks()}


def _batch_indices(rng: np.random.Generator, n: int, batches: int, batch_size: int) -> np.ndarray:
    """Shuffled without replacement; further permutations only when one epoch needs more than n samples"""
    needed = batches * batch_size
    rounds = -(-needed // n)
    order = np.concatenate([rng.permutation(n) for _ in range(rounds)])
    return order[:needed].reshape(batches, batch_size)


# ═══════════════════════════════════════════════════════════════════════════════
# TRAINING
# ═══════════════════════════════════════════════════════════════════════════════

def train(
    net: Network,
    data: Dataset,
    tcfg: TrainingConfig,
    rcfg: Optional[RegularizerConfig] = None,
    validation: Optional[Dataset] = None,
    run_dir: Optional[RunDirectory] = None,
    log_path=None,
) -> Tuple[Network, TrainingLog]:
    """
    Train a copy of net with proximal momentum SGD.

    Args:
        net: Initial network (left untouched)
        data: Training set
        tcfg: Schedule and switches
        rcfg: Regularizer; None (or tcfg.proximal False) trains plain SGD
        validation: Optional validation set for the per-epoch record
        run_dir: Destination of periodic checkpoints
        log_path: JSONL file receiving one record per epoch

    Returns:
        (trained network, training log)

    Raises:
        TrainingDivergedError: batch loss non-finite or above the guard
    """
    if len(data) == 0:
        raise DomainError("cannot train on an empty dataset")
    if data.sample_shape != tuple(net.spec.input_shape):
        raise DomainError(f"dataset samples {list(data.sample_shape)} do not fit input {net.spec.input_shape}")

    net = net.copy()
    optimizer = MomentumSGD(net, tcfg.momentum, tcfg.weight_decay)
    rng = np.random.default_rng(tcfg.seed)
    log = TrainingLog()
    proximal = tcfg.proximal and rcfg is not None
    if log_path is not None:
        write_jsonl(log_path, [])

    log_training_start(tcfg.epochs, tcfg.batches_per_epoch, tcfg.batch_size, tcfg.seed)
    run_start = time.time()

    for epoch in range(1, tcfg.epochs + 1):
        epoch_start = time.time()
        lr = learning_rate_at(tcfg, epoch)
        batch_losses = []

        for b, rows in enumerate(_batch_indices(rng, len(data), tcfg.batches_per_epoch, tcfg.batch_size)):
            try:
                prediction, activations = forward(net, data.inputs[rows])
                loss, loss_grad = loss_and_grad(net.spec.loss, prediction, data.labels[rows])
            except DomainError as e:
                raise TrainingDivergedError(epoch, b, math.nan) from e
            if not math.isfinite(loss) or loss > DIVERGENCE_LOSS_LIMIT:
                raise TrainingDivergedError(epoch, b, loss)
            optimizer.step(net, backward(net, activations, loss_grad), lr)
            batch_losses.append(loss)
            log_batch(epoch, b, loss)

        if proximal:
            if lr > 0.0:
                killed = apply_prox(net, lr, rcfg)
                log_prox_pass(lr, killed, regularizer_value(net, rcfg))
            else:
                killed = {blk.key: np.flatnonzero(blk.zero_mask()).tolist() for blk in net.prunable_blocks()}
            if tcfg.freeze_killed:
                optimizer.freeze(killed)
            log.final_killed = killed

        record = _epoch_record(net, data, validation, rcfg, epoch, batch_losses, lr, optimizer.frozen_count)
        log.records.append(record)
        if log_path is not None:
            append_jsonl(log_path, record.model_dump())
        if run_dir is not None and tcfg.checkpoint_every and epoch % tcfg.checkpoint_every == 0:
            save_checkpoint(run_dir.epoch_checkpoint(epoch), net, {"seed": tcfg.seed, "epoch": epoch})

        log_epoch_complete(
            epoch,
            record.loss,
            record.train_accuracy,
            record.validation_accuracy,
            lr,
            record.zeroed,
            time.time() - epoch_start,
        )

    log_training_complete(tcfg.epochs, time.time() - run_start)
    return net, log


def _epoch_record(
    net: Network,
    data: Dataset,
    validation: Optional[Dataset],
    rcfg: Optional[RegularizerConfig],
    epoch: int,
    batch_losses: List[float],
    lr: float,
    frozen: int,
) -> EpochRecord:
    train_acc = evaluate(net, data)
    val_acc = evaluate(net, validation) if validation is not None and len(validation) else None
    return EpochRecord(
        epoch=epoch,
        loss=float(np.mean(batch_losses)),
        train_accuracy=train_acc,
        validation_accuracy=val_acc,
        train_val_gap=None if val_acc is None else train_acc - val_acc,
        regularizer_value=regularizer_value(net, rcfg) if rcfg is not None else 0.0,
        zeroed=zeroed_counts(net),
        frozen_groups=frozen,
        learning_rate=lr,
    )


# ═══════════════════════════════════════════════════════════════════════════════
# SENSITIVITY SWEEP
# ═══════════════════════════════════════════════════════════════════════════════

class SweepRun(BaseModel):
    lambda_first: float
    lambda_rest: float
    validation_accuracy: float
    zeroed_pct: float


class SweepResult(BaseModel):
    runs: List[SweepRun]
    accuracy_mean: float = Field(..., description="Percent")
    accuracy_std: float = Field(..., description="Percentage points (population std)")
    zeroed_mean: float
    zeroed_std: float


def sensitivity_sweep(
    spec: NetworkSpec,
    init_seed: int,
    data: Dataset,
    validation: Dataset,
    tcfg: TrainingConfig,
    lambda_pairs: Sequence[Tuple[float, float]],
    first_count: int,
    alpha: float = 0.0,
) -> SweepResult:
    """
    Retrain the same initialization under several (lambda_first, lambda_rest)
    pairs and summarize the spread of validation accuracy and sparsity.
    """
    if not lambda_pairs:
        raise DomainError("sensitivity sweep needs at least one lambda pair")
    start_net = init_network(spec, init_seed)
    total_neurons = sum(b.neuron_count for b in start_net.prunable_blocks())
    runs = []
    for lambda_first, lambda_rest in lambda_pairs:
        lambdas = two_tier_lambdas(len(start_net.prunable_blocks()), first_count, lambda_first, lambda_rest)
        rcfg = RegularizerConfig.for_network(start_net, lambdas, alpha)
        trained, _ = train(start_net, data, tcfg, rcfg, validation)
        zeroed = sum(zeroed_counts(trained).values())
        runs.append(SweepRun(
            lambda_first=lambda_first,
            lambda_rest=lambda_rest,
            validation_accuracy=100.0 * evaluate(trained, validation),
            zeroed_pct=100.0 * zeroed / total_neurons,
        ))
        logger_trainer.info(
            f"SWEEP_RUN | lambdas=({lambda_first}, {lambda_rest}) | "
            f"val_acc={runs[-1].validation_accuracy:.2f} | zeroed_pct={runs[-1].zeroed_pct:.2f}"
        )

    accuracies = [r.validation_accuracy for r in runs]
    zeroed = [r.zeroed_pct for r in runs]
    return SweepResult(
        runs=runs,
        accuracy_mean=statistics.fmean(accuracies),
        accuracy_std=statistics.pstdev(accuracies),
        zeroed_mean=statistics.fmean(zeroed),
        zeroed_std=statistics.pstdev(zeroed),
    )
