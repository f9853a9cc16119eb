"""
Toolkit Configuration

Centralized defaults for training, regularization, pruning and verification.
Run-specific settings come from the experiment JSON (see app/schemas.py);
the single environment override is loaded separately (infra/env.py).
"""


# ═══════════════════════════════════════════════════════════════════════════════
# NUMERICS
# ═══════════════════════════════════════════════════════════════════════════════

# Divergence guard: abort training when the batch loss exceeds this
DIVERGENCE_LOSS_LIMIT: float = 1e6

# Batch size used when evaluating accuracy over a whole dataset
EVAL_CHUNK_SIZE: int = 1024


# ═══════════════════════════════════════════════════════════════════════════════
# TRAINING DEFAULTS (ICDAR setup, scaled to desk size)
# ═══════════════════════════════════════════════════════════════════════════════

DEFAULT_INITIAL_LR: float = 0.1
DEFAULT_LR_DROP_FACTOR: float = 0.1
DEFAULT_MOMENTUM: float = 0.9
DEFAULT_BATCH_SIZE: int = 256
DEFAULT_BATCHES_PER_EPOCH: int = 1000

# Suppress gradient updates of groups zeroed by the prox
DEFAULT_FREEZE_KILLED: bool = True

# Plain weight decay, off unless the experiment asks for it
DEFAULT_WEIGHT_DECAY: float = 0.0


# ═══════════════════════════════════════════════════════════════════════════════
# REGULARIZATION DEFAULTS
# ═══════════════════════════════════════════════════════════════════════════════

# Two-tier lambda: small for the first layers, larger for the rest
DEFAULT_LAMBDA_FIRST: float = 0.102
DEFAULT_LAMBDA_REST: float = 0.255
DEFAULT_FIRST_LAYER_COUNT: int = 3

# alpha = 0 is group sparsity, alpha = 0.5 the sparse group Lasso runs
DEFAULT_ALPHA: float = 0.0


# ═══════════════════════════════════════════════════════════════════════════════
# VERIFICATION TOLERANCES
# ═══════════════════════════════════════════════════════════════════════════════

PROX_PARAM_TOLERANCE: float = 1e-6
PROX_OBJECTIVE_TOLERANCE: float = 1e-8
PROX_CHECK_MAX_GROUP_SIZE: int = 8
PROX_CHECK_ALPHAS = (0.0, 0.25, 0.5, 1.0)
PROX_CHECK_DEFAULT_TRIALS: int = 1000
PROX_CHECK_DEFAULT_SEED: int = 0

# Compaction equivalence check
EQUIVALENCE_INPUTS: int = 100
EQUIVALENCE_TOLERANCE: float = 1e-10

# Sensitivity echo: validation accuracy std must stay below this (points)
SWEEP_MAX_ACCURACY_STD: float = 2.0


# ═══════════════════════════════════════════════════════════════════════════════
# ACCOUNTING
# ═══════════════════════════════════════════════════════════════════════════════

# FLOPs = FLOPS_PER_MAC * multiply-accumulates
FLOPS_PER_MAC: int = 2

# Bytes per stored value (64-bit reals)
BYTES_PER_VALUE: int = 8

# Dead-neuron detection threshold; exact zero unless inspecting foreign checkpoints
DEAD_EPSILON: float = 0.0


# ═══════════════════════════════════════════════════════════════════════════════
# ARTIFACTS
# ═══════════════════════════════════════════════════════════════════════════════

CHECKPOINT_FILE: str = "checkpoint.bin"
BASELINE_CHECKPOINT_FILE: str = "baseline_checkpoint.bin"
PRUNED_CHECKPOINT_FILE: str = "pruned.bin"
LOG_FILE: str = "log.jsonl"
BASELINE_LOG_FILE: str = "baseline_log.jsonl"
UNIFORM_CHECKPOINT_FILE: str = "uniform_checkpoint.bin"
UNIFORM_LOG_FILE: str = "uniform_log.jsonl"
REPORT_JSON_FILE: str = "report.json"
REPORT_TEXT_FILE: str = "report.txt"
SWEEP_JSON_FILE: str = "sweep.json"

# Environment variable allowed to override the output directory
OUTPUT_DIR_ENV: str = "GSPRUNE_OUTPUT_DIR"

# Opt-in switch for the slow end-to-end tests
SLOW_TESTS_ENV: str = "GSPRUNE_SLOW_TESTS"


# ═══════════════════════════════════════════════════════════════════════════════
# EXIT CODES
# ═══════════════════════════════════════════════════════════════════════════════

EXIT_OK: int = 0
EXIT_FAILURE: int = 1
EXIT_USAGE: int = 2


# ═══════════════════════════════════════════════════════════════════════════════
# LOGGING CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

LOG_LEVEL: str = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL

# Optional log file (None keeps logging on the console only)
LOG_FILE_PATH = None


# ═══════════════════════════════════════════════════════════════════════════════
# HELPER FUNCTIONS
# ═══════════════════════════════════════════════════════════════════════════════

def validate_config():
    """Validate configuration on startup"""
    assert DIVERGENCE_LOSS_LIMIT > 0, "DIVERGENCE_LOSS_LIMIT must be positive"
    assert 0.0 <= DEFAULT_MOMENTUM < 1.0, "DEFAULT_MOMENTUM must be in [0, 1)"
    assert 0.0 < DEFAULT_LR_DROP_FACTOR < 1.0, "DEFAULT_LR_DROP_FACTOR must be in (0, 1)"
    assert 0.0 <= DEFAULT_ALPHA <= 1.0, "DEFAULT_ALPHA must be in [0, 1]"
    assert DEFAULT_LAMBDA_FIRST >= 0 and DEFAULT_LAMBDA_REST >= 0, "lambdas must be non-negative"
    assert all(0.0 <= a <= 1.0 for a in PROX_CHECK_ALPHAS), "Invalid PROX_CHECK_ALPHAS"
    assert PROX_CHECK_MAX_GROUP_SIZE >= 1, "PROX_CHECK_MAX_GROUP_SIZE must be positive"
    assert DEAD_EPSILON >= 0.0, "DEAD_EPSILON must be non-negative"
    assert EXIT_OK != EXIT_FAILURE != EXIT_USAGE, "Exit codes must be distinct"


# Validate on import
validate_config()
