"""
Command Runner

Handles command execution with:
- Input validation
- Timing and structured logging
- Failure classification into exit codes
"""

import time
from enum import Enum
from typing import List, Tuple

from pydantic import ValidationError

from app.config import EXIT_FAILURE, EXIT_USAGE
from app.registry import COMMAND_REGISTRY
from core.errors import ConfigError, GSPruneError
from infra.logger import log_command_complete, log_command_start, logger_cli
from infra import ui


# ═══════════════════════════════════════════════════════════════════════════════
# FAILURE CLASSIFICATION
# ═══════════════════════════════════════════════════════════════════════════════

class FailureType(Enum):
    """
    Kinds of command failure and the exit code each maps to.

    USAGE: bad arguments, invalid config, missing files → 2
    RUNTIME: library error while executing (structural, format, divergence, ...) → 1
    """
    USAGE = "usage"
    RUNTIME = "runtime"


EXIT_CODES = {
    FailureType.USAGE: EXIT_USAGE,
    FailureType.RUNTIME: EXIT_FAILURE,
}

# Exceptions that mean the caller asked for something impossible
USAGE_EXCEPTIONS = (
    ConfigError,
    ValidationError,
    FileNotFoundError,
    IsADirectoryError,
)


def classify_failure(error: BaseException) -> FailureType:
    """
    Classify a command failure.

    Examples:
        >>> classify_failure(ConfigError("bad", "data.images_path"))
        FailureType.USAGE

        >>> classify_failure(StructuralError("empty", "layer0"))
        FailureType.RUNTIME
    """
    if isinstance(error, USAGE_EXCEPTIONS):
        logger_cli.debug(f"CLASSIFY_FAILURE | USAGE | error={type(error).__name__}")
        return FailureType.USAGE
    logger_cli.debug(f"CLASSIFY_FAILURE | RUNTIME | error={type(error).__name__}")
    return FailureType.RUNTIME


def validation_messages(error: ValidationError, prefix: str = "") -> List[Tuple[str, str]]:
    """(dotted field path, message) per pydantic error"""
    messages = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"])
        if prefix:
            path = f"{prefix}.{path}" if path else prefix
        messages.append((path or "<root>", item["msg"]))
    return messages


# ═══════════════════════════════════════════════════════════════════════════════
# MAIN COMMAND RUNNER
# ═══════════════════════════════════════════════════════════════════════════════

def run_command(command: str, args: dict) -> int:
    """
    Validate, execute and time one command.

    Args:
        command: Registry name ("train", "prune", ...)
        args: Raw arguments for the command's schema

    Returns:
        Exit code: 0 success, 1 failed check or runtime error, 2 usage error
    """
    start_time = time.perf_counter()
    log_command_start(command)

    if command not in COMMAND_REGISTRY:
        logger_cli.error(f"COMMAND_NOT_FOUND | command={command}")
        ui.print_error(f"unknown command: {command}")
        return _finish(command, EXIT_USAGE, start_time)

    entry = COMMAND_REGISTRY[command]

    validated = _validate_input(command, entry["schema"], args)
    if validated is None:
        return _finish(command, EXIT_USAGE, start_time)

    try:
        exit_code = entry["handler"](validated)
    except Exception as e:
        exit_code = _handle_failure(command, e)

    return _finish(command, exit_code, start_time)


# ═══════════════════════════════════════════════════════════════════════════════
# INPUT VALIDATION
# ═══════════════════════════════════════════════════════════════════════════════

def _validate_input(command: str, schema, args: dict):
    """
    Validate command arguments against schema.

    Returns:
        Validated input object or None if validation fails
    """
    try:
        logger_cli.debug(f"VALIDATE_INPUT | command={command}")
        return schema(**args)
    except ValidationError as e:
        logger_cli.error(f"VALIDATION_FAIL | command={command} | error={str(e)[:200]}")
        ui.print_validation_errors(validation_messages(e))
        return None


# ═══════════════════════════════════════════════════════════════════════════════
# HELPER FUNCTIONS
# ═══════════════════════════════════════════════════════════════════════════════

def _handle_failure(command: str, error: Exception) -> int:
    failure = classify_failure(error)
    if isinstance(error, ValidationError):
        # nested config documents (experiment JSON, metrics JSON)
        ui.print_validation_errors(validation_messages(error, error.title))
    else:
        ui.print_error(str(error))

    if isinstance(error, GSPruneError) or failure is FailureType.USAGE:
        logger_cli.error(f"COMMAND_FAILED | command={command} | type={type(error).__name__} | error={str(error)[:200]}")
    else:
        logger_cli.exception(f"COMMAND_CRASHED | command={command} | error={str(error)[:200]}")
    return EXIT_CODES[failure]


def _finish(command: str, exit_code: int, start_time: float) -> int:
    log_command_complete(command, exit_code, time.perf_counter() - start_time)
    return exit_code
