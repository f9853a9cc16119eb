"""
Error Hierarchy

Every failure raised by the library derives from GSPruneError so the
command runner can classify it into an exit code.
"""

from typing import Optional, Sequence


# ═══════════════════════════════════════════════════════════════════════════════
# BASE
# ═══════════════════════════════════════════════════════════════════════════════

class GSPruneError(Exception):
    """Base class for all library errors"""
    pass


# ═══════════════════════════════════════════════════════════════════════════════
# NUMERIC / SHAPE ERRORS
# ═══════════════════════════════════════════════════════════════════════════════

class DomainError(GSPruneError, ValueError):
    """Argument outside the mathematical domain of an operation"""
    pass


class ShapeError(GSPruneError, ValueError):
    """Incompatible tensor shapes. Both shapes are named in the message."""

    def __init__(self, message: str, left: Sequence[int] = (), right: Sequence[int] = ()):
        self.left = tuple(left)
        self.right = tuple(right)
        if self.left or self.right:
            message = f"{message} (got {list(self.left)} vs {list(self.right)})"
        super().__init__(message)


# ═══════════════════════════════════════════════════════════════════════════════
# STRUCTURAL ERRORS
# ═══════════════════════════════════════════════════════════════════════════════

class ContractError(GSPruneError):
    """Caller broke a contract: stale activations, mismatched spec families"""
    pass


class StructuralError(GSPruneError):
    """Compaction would sever the network"""

    def __init__(self, message: str, layer: Optional[str] = None):
        self.layer = layer
        super().__init__(message)


class ConfigError(GSPruneError, ValueError):
    """Invalid configuration. Carries the offending field name."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


# ═══════════════════════════════════════════════════════════════════════════════
# I/O AND RUNTIME ERRORS
# ═══════════════════════════════════════════════════════════════════════════════

class FormatError(GSPruneError):
    """Malformed on-disk data (IDX, checkpoint). Carries the byte offset."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)


class TrainingDivergedError(GSPruneError):
    """Loss became non-finite or exceeded the divergence guard"""

    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch}, batch {batch} (loss={loss})")


class DegenerateTeacherError(GSPruneError):
    """Synthetic teacher never produced every class"""
    pass
