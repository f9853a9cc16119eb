"""
Command Schemas and Experiment Configuration

Defines Pydantic schemas for every CLI command and the experiment JSON.
Each command has an input schema that validates arguments before the
handler runs; field-level failures become usage errors (exit code 2).
"""

import math
from pathlib import Path
from typing import Callable, List, Literal, Optional, Tuple, Type, TypedDict

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config import (
    DEFAULT_ALPHA,
    DEFAULT_FIRST_LAYER_COUNT,
    DEFAULT_LAMBDA_FIRST,
    DEFAULT_LAMBDA_REST,
    PROX_CHECK_DEFAULT_SEED,
    PROX_CHECK_DEFAULT_TRIALS,
)
from core.network.model import Network
from core.network.spec import NetworkSpec
from core.regularization import RegularizerConfig, two_tier_lambdas
from core.trainer import TrainingConfig


# ═══════════════════════════════════════════════════════════════════════════════
# COMMAND REGISTRY TYPE
# ═══════════════════════════════════════════════════════════════════════════════

class CommandEntry(TypedDict):
    """
    Registry entry for a command.

    Attributes:
        schema: Pydantic model validating the command arguments
        handler: Function taking the validated input, returning an exit code
        description: One-line help text
    """
    schema: Type[BaseModel]
    handler: Callable

    description: str


def _existing_file(value: Optional[Path]) -> Optional[Path]:
    if value is not None and not Path(value).is_file():
        raise ValueError(f"file not found: {value}")
    return value


# ═══════════════════════════════════════════════════════════════════════════════
# EXPERIMENT CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

class RegularizerSettings(BaseModel):
    """
    Two-tier lambda scheme: lambda_first for the first prunable blocks,
    lambda_rest for the others. per_layer_lambda, when given, overrides both.
    """
    first_layer_count: int = Field(default=DEFAULT_FIRST_LAYER_COUNT, ge=0)
    lambda_first: float = Field(default=DEFAULT_LAMBDA_FIRST, ge=0.0)
    lambda_rest: float = Field(default=DEFAULT_LAMBDA_REST, ge=0.0)
    alpha: float = Field(default=DEFAULT_ALPHA, ge=0.0, le=1.0, description="0 = group sparsity, > 0 = sparse group Lasso")
    per_layer_lambda: Optional[List[float]] = Field(
        None,
        description="Explicit lambda per prunable block"
    )

    @field_validator("lambda_first", "lambda_rest")
    @classmethod
    def _finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("lambda must be finite")
        return v

    def lambdas_for(self, net: Network) -> List[float]:
        if self.per_layer_lambda is not None:
            return list(self.per_layer_lambda)
        return two_tier_lambdas(len(net.prunable_blocks()), self.first_layer_count, self.lambda_first, self.lambda_rest)

    def build(self, net: Network) -> RegularizerConfig:
        return RegularizerConfig.for_network(net, self.lambdas_for(net), self.alpha)

    def scaled(self, lambda_first: float, lambda_rest: float) -> "RegularizerSettings":
        return self.model_copy(update={"lambda_first": lambda_first, "lambda_rest": lambda_rest, "per_layer_lambda": None})


class DataSource(BaseModel):
    """
    Where samples come from.

    idx:        images_path + labels_path
    csv:        csv_path
    synthetic:  teacher-student task drawn from a random one-hidden-layer teacher
    """
    kind: Literal["idx", "csv", "synthetic"] = Field(..., description="Dataset source")

    images_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    csv_path: Optional[Path] = None

    teacher_width: int = Field(default=8, ge=1)
    input_dim: int = Field(default=16, ge=1)
    classes: int = Field(default=4, ge=2)
    n_samples: int = Field(default=6000, ge=1, description="Train plus validation samples")
    teacher_seed: int = 0

    class_count: Optional[int] = Field(None, ge=1, description="Classes of an idx/csv set (default: max label + 1)")
    validation_count: int = Field(default=0, ge=0, description="Samples split off for validation")
    split_seed: int = 0

    @field_validator("images_path", "labels_path", "csv_path")
    @classmethod
    def _paths_exist(cls, v):
        return _existing_file(v)

    @model_validator(mode="after")
    def _required_paths(self):
        if self.kind == "idx":
            if self.images_path is None:
                raise ValueError("images_path is required for idx data")
            if self.labels_path is None:
                raise ValueError("labels_path is required for idx data")
        if self.kind == "csv" and self.csv_path is None:
            raise ValueError("csv_path is required for csv data")
        if self.kind == "synthetic" and self.validation_count >= self.n_samples:
            raise ValueError("validation_count must leave training samples")
        return self


class ExperimentConfig(BaseModel):
    """
    One training experiment. Same file, same bytes out.

    Example:
        {
          "network": {"input_shape": [16], "layers": [...]},
          "training": {"epochs": 30, "initial_lr": 0.05, ...},
          "regularizer": {"lambda_first": 0.2, "lambda_rest": 0.4},
          "data": {"kind": "synthetic", "validation_count": 1000},
          "output_dir": "runs/teacher_student",
          "seed": 7,
          "paired_baseline": true
        }
    """
    network: NetworkSpec
    training: TrainingConfig
    regularizer: RegularizerSettings = Field(default_factory=RegularizerSettings)
    data: DataSource
    output_dir: str = Field(default="runs/default", description="Run directory (GSPRUNE_OUTPUT_DIR overrides)")
    seed: int = Field(default=0, description="Initialization seed")
    paired_baseline: bool = Field(
        default=False,
        description="Also train a lambda = 0 baseline from the same seed and write a report"
    )
    uniform_baseline_scale: Optional[float] = Field(
        default=None,
        gt=0,
        le=1,
        description="Paired mode: also train a lambda = 0 network with every hidden width scaled by this factor"
    )

    @model_validator(mode="after")
    def _uniform_needs_pairing(self):
        if self.uniform_baseline_scale is not None and not self.paired_baseline:
            raise ValueError("uniform_baseline_scale needs paired_baseline")
        return self

    @model_validator(mode="after")
    def _data_fits_network(self):
        if self.data.kind == "synthetic":
            if list(self.network.input_shape) != [self.data.input_dim]:
                raise ValueError(f"network input_shape {self.network.input_shape} != synthetic input_dim {self.data.input_dim}")
            if self.network.class_count != self.data.classes:
                raise ValueError(f"network has {self.network.class_count} classes, data has {self.data.classes}")
        return self


# ═══════════════════════════════════════════════════════════════════════════════
# COMMAND INPUTS
# ═══════════════════════════════════════════════════════════════════════════════

class TrainInput(BaseModel):
    """Train the configured network (and its baseline in paired mode)"""
    config: Path = Field(..., description="Experiment JSON")

    @field_validator("config")
    @classmethod
    def _config_exists(cls, v):
        return _existing_file(v)


class PruneInput(BaseModel):
    """Compact a checkpoint by deleting dead neurons"""
    input_path: Path = Field(..., description="Checkpoint to compact")
    output_path: Path = Field(..., description="Destination of the compacted checkpoint")

    @field_validator("input_path")
    @classmethod
    def _input_exists(cls, v):
        return _existing_file(v)


class ReportMetrics(BaseModel):
    """Accuracies measured elsewhere, as fractions in [0, 1]"""
    accuracy_regularized: float = Field(..., ge=0.0, le=1.0)
    accuracy_baseline: float = Field(..., ge=0.0, le=1.0)


class ReportInput(BaseModel):
    """Sparsity report for a (regularized, compacted) checkpoint pair"""
    before: Path = Field(..., description="Regularized checkpoint")
    after: Path = Field(..., description="Compacted checkpoint")
    metrics: Path = Field(..., description="JSON with accuracy_regularized and accuracy_baseline")
    output_dir: Optional[Path] = Field(None, description="Where report.json / report.txt go (default: next to --after)")

    @field_validator("before", "after", "metrics")
    @classmethod
    def _files_exist(cls, v):
        return _existing_file(v)


class ProxCheckInput(BaseModel):
    """Closed-form proximal operator vs numerical minimizer"""
    trials: int = Field(default=PROX_CHECK_DEFAULT_TRIALS, ge=1)
    seed: int = PROX_CHECK_DEFAULT_SEED


class SweepInput(BaseModel):
    """Lambda sensitivity sweep around the configured pair"""
    config: Path = Field(..., description="Experiment JSON")
    pairs: Optional[List[Tuple[float, float]]] = Field(
        None,
        description="(lambda_first, lambda_rest) pairs; default spans 0.5x to 2x the configured pair"
    )

    @field_validator("config")
    @classmethod
    def _config_exists(cls, v):
        return _existing_file(v)

    @field_validator("pairs")
    @classmethod
    def _valid_pairs(cls, v):
        if v is not None:
            if not v:
                raise ValueError("at least one pair is required")
            if any(not (math.isfinite(a) and math.isfinite(b)) or a < 0 or b < 0 for a, b in v):
                raise ValueError("lambdas must be finite and non-negative")
        return v
