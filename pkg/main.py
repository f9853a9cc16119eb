"""
gsprune command-line interface

    train       --config <experiment.json>
    prune       --in <checkpoint> --out <checkpoint>
    report      --before <checkpoint> --after <checkpoint> --metrics <json>
    prox-check  --trials N --seed S
    sweep       --config <experiment.json> [--pairs a,b ...]

Exit codes: 0 success, 1 failed verification or runtime error, 2 usage error.
"""

import argparse
import sys
from typing import List, Optional, Tuple

from app.config import EXIT_FAILURE, EXIT_USAGE, LOG_FILE_PATH, LOG_LEVEL, validate_config
from app.registry import COMMAND_REGISTRY
from app.runner import run_command
from infra.logger import logger_cli, setup_logging


# ═══════════════════════════════════════════════════════════════════════════════
# ARGUMENT PARSING
# ═══════════════════════════════════════════════════════════════════════════════

def _lambda_pair(text: str) -> Tuple[float, float]:
    """'0.1,0.25' -> (0.1, 0.25)"""
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lambda_first,lambda_rest, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambdas must be numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsprune", description="Group-sparsity training and neuron pruning")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING, ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=COMMAND_REGISTRY[name]["description"])

    train = command("train")
    train.add_argument("--config", required=True)

    prune = command("prune")
    prune.add_argument("--in", dest="input_path", required=True)
    prune.add_argument("--out", dest="output_path", required=True)

    report = command("report")
    report.add_argument("--before", required=True)
    report.add_argument("--after", required=True)
    report.add_argument("--metrics", required=True)
    report.add_argument("--output-dir", dest="output_dir")

    prox = command("prox-check")
    prox.add_argument("--trials", type=int)
    prox.add_argument("--seed", type=int)

    sweep = command("sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--pairs", type=_lambda_pair, nargs="+")
    return parser


def command_args(namespace: argparse.Namespace) -> dict:
    """Schema arguments: everything but the globals, unset options left to defaults"""
    args = vars(namespace).copy()
    for key in ("command", "log_level"):
        args.pop(key, None)
    return {k: v for k, v in args.items() if v is not None}


# ═══════════════════════════════════════════════════════════════════════════════
# MAIN ENTRY POINT
# ═══════════════════════════════════════════════════════════════════════════════

def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Sets up logging, validates configuration and dispatches one command.
    """
    try:
        namespace = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    setup_logging(level=namespace.log_level, log_file=LOG_FILE_PATH)
    try:
        validate_config()
    except AssertionError as e:
        logger_cli.error(f"CONFIG_INVALID | error={e}")
        return EXIT_USAGE

    try:
        return run_command(namespace.command, command_args(namespace))
    except KeyboardInterrupt:
        logger_cli.warning(f"INTERRUPTED | command={namespace.command}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
