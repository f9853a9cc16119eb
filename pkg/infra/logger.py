"""
Centralized Logging Configuration

Provides structured logging for the training and pruning toolkit with:
- Component-specific loggers
- Consistent "EVENT | key=value" formatting
- Timing helpers
"""

import logging
import sys
from typing import Dict, List, Optional


# ═══════════════════════════════════════════════════════════════════════════════
# LOGGER CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """
    Configure logging for the entire application.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file path to write logs to
    """
    log_level = getattr(logging, level.upper(), logging.INFO)

    console_formatter = logging.Formatter(
        fmt="%(asctime)s | %(name)-15s | %(levelname)-8s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    file_formatter = logging.Formatter(
        fmt="%(asctime)s | %(name)s | %(levelname)s | %(filename)s:%(lineno)d | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(console_formatter)

    root_logger = logging.getLogger()

    # Prevent duplicate logs if setup_logging() is called again
    if root_logger.handlers:
        root_logger.handlers.clear()

    root_logger.setLevel(log_level)
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(file_formatter)
        root_logger.addHandler(file_handler)

    # cvxpy and its solvers are chatty at INFO
    logging.getLogger("cvxpy").setLevel(logging.WARNING)
    logging.getLogger("__cvxpy__").setLevel(logging.WARNING)


# ═══════════════════════════════════════════════════════════════════════════════
# COMPONENT LOGGERS
# ═══════════════════════════════════════════════════════════════════════════════

logger_tensor = logging.getLogger("gsprune.tensor")
logger_network = logging.getLogger("gsprune.network")
logger_regularizer = logging.getLogger("gsprune.regularizer")
logger_trainer = logging.getLogger("gsprune.trainer")
logger_pruner = logging.getLogger("gsprune.pruner")
logger_data = logging.getLogger("gsprune.data")
logger_cli = logging.getLogger("gsprune.cli")


# ═══════════════════════════════════════════════════════════════════════════════
# STRUCTURED LOGGING HELPERS
# ═══════════════════════════════════════════════════════════════════════════════

class LogContext:
    """Helper for consistent structured logging"""

    @staticmethod
    def format_dict(data: dict) -> str:
        """Format dictionary for logging"""
        return " | ".join(f"{k}={v}" for k, v in data.items())

    @staticmethod
    def format_counts(counts: Dict[str, int]) -> str:
        """Format per-block counts compactly: 'layer0:3,layer2:5'"""
        return ",".join(f"{k}:{v}" for k, v in counts.items()) or "-"

    @staticmethod
    def format_timing(duration_seconds: float) -> str:
        """Format timing information"""
        return f"{duration_seconds * 1000:.2f}ms"


# ═══════════════════════════════════════════════════════════════════════════════
# TRAINING
# ═══════════════════════════════════════════════════════════════════════════════

def log_training_start(epochs: int, batches_per_epoch: int, batch_size: int, seed: int):
    """Log the start of a training run"""
    context = {
        "epochs": epochs,
        "batches": batches_per_epoch,
        "batch_size": batch_size,
        "seed": seed,
    }
    logger_trainer.info(f"TRAIN_START | {LogContext.format_dict(context)}")


def log_batch(epoch: int, batch: int, loss: float):
    """Log a single mini-batch step"""
    logger_trainer.debug(f"BATCH | epoch={epoch} | batch={batch} | loss={loss:.6f}")


def log_epoch_complete(
    epoch: int,
    loss: float,
    train_accuracy: float,
    validation_accuracy: Optional[float],
    learning_rate: float,
    zeroed: Dict[str, int],
    duration_seconds: float,
):
    """Log an epoch summary"""
    context = {
        "epoch": epoch,
        "loss": f"{loss:.6f}",
        "train_acc": f"{train_accuracy:.4f}",
        "val_acc": "-" if validation_accuracy is None else f"{validation_accuracy:.4f}",
        "lr": f"{learning_rate:.6g}",
        "zeroed": LogContext.format_counts(zeroed),
        "duration": LogContext.format_timing(duration_seconds),
    }
    logger_trainer.info(f"EPOCH_COMPLETE | {LogContext.format_dict(context)}")


def log_training_complete(epochs: int, duration_seconds: float):
    """Log completion of a training run"""
    context = {"epochs": epochs, "duration": LogContext.format_timing(duration_seconds)}
    logger_trainer.info(f"TRAIN_COMPLETE | {LogContext.format_dict(context)}")


# ═══════════════════════════════════════════════════════════════════════════════
# REGULARIZATION
# ═══════════════════════════════════════════════════════════════════════════════

def log_prox_pass(step_size: float, killed: Dict[str, List[int]], penalty: float):
    """Log one proximal pass over all groups"""
    context = {
        "t": f"{step_size:.6g}",
        "killed": LogContext.format_counts({k: len(v) for k, v in killed.items()}),
        "penalty": f"{penalty:.6f}",
    }
    logger_regularizer.info(f"PROX_PASS | {LogContext.format_dict(context)}")


# ═══════════════════════════════════════════════════════════════════════════════
# PRUNING
# ═══════════════════════════════════════════════════════════════════════════════

def log_compaction(before: Dict[str, int], after: Dict[str, int], removed_params: int):
    """Log a structural compaction"""
    widths = {k: f"{before[k]}->{after[k]}" for k in before}
    context = {"widths": LogContext.format_dict(widths).replace(" | ", ","), "removed_params": removed_params}
    logger_pruner.info(f"COMPACT | {LogContext.format_dict(context)}")


# ═══════════════════════════════════════════════════════════════════════════════
# COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════

def log_command_start(command: str, run_id: Optional[str] = None):
    """Log command start"""
    context = {"command": command}
    if run_id:
        context["run_id"] = run_id
    logger_cli.info(f"COMMAND_START | {LogContext.format_dict(context)}")


def log_command_complete(command: str, exit_code: int, duration_seconds: float):
    """Log command completion"""
    context = {
        "command": command,
        "exit_code": exit_code,
        "duration": LogContext.format_timing(duration_seconds),
    }
    level = logger_cli.info if exit_code == 0 else logger_cli.error
    level(f"COMMAND_COMPLETE | {LogContext.format_dict(context)}")
