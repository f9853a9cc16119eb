"""
Run Artifacts

Run directory layout and JSON / JSONL persistence for logs and reports.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List

from app.config import (
    BASELINE_CHECKPOINT_FILE,
    BASELINE_LOG_FILE,
    CHECKPOINT_FILE,
    LOG_FILE,
    PRUNED_CHECKPOINT_FILE,
    REPORT_JSON_FILE,
    REPORT_TEXT_FILE,
    SWEEP_JSON_FILE,
    UNIFORM_CHECKPOINT_FILE,
    UNIFORM_LOG_FILE,
)


# ═══════════════════════════════════════════════════════════════════════════════
# RUN DIRECTORY
# ═══════════════════════════════════════════════════════════════════════════════

class RunDirectory:
    """
    All artifacts of one command invocation.

    Layout:
        checkpoint.bin, log.jsonl, report.json, report.txt
        baseline_checkpoint.bin, baseline_log.jsonl, pruned.bin (paired mode)
        uniform_checkpoint.bin, uniform_log.jsonl (paired mode with a uniform baseline)
        sweep.json (sensitivity sweep)
    """

    def __init__(self, root):
        self.root = Path(root)
        self._ensure_directory()

    def _ensure_directory(self):
        self.root.mkdir(parents=True, exist_ok=True)

    @property
    def checkpoint(self) -> Path:
        return self.root / CHECKPOINT_FILE

    @property
    def baseline_checkpoint(self) -> Path:
        return self.root / BASELINE_CHECKPOINT_FILE

    @property
    def pruned_checkpoint(self) -> Path:
        return self.root / PRUNED_CHECKPOINT_FILE

    @property
    def log(self) -> Path:
        return self.root / LOG_FILE

    @property
    def baseline_log(self) -> Path:
        return self.root / BASELINE_LOG_FILE

    @property
    def uniform_checkpoint(self) -> Path:
        return self.root / UNIFORM_CHECKPOINT_FILE

    @property
    def uniform_log(self) -> Path:
        return self.root / UNIFORM_LOG_FILE

    @property
    def report_json(self) -> Path:
        return self.root / REPORT_JSON_FILE

    @property
    def report_text(self) -> Path:
        return self.root / REPORT_TEXT_FILE

    @property
    def sweep_json(self) -> Path:
        return self.root / SWEEP_JSON_FILE

    def epoch_checkpoint(self, epoch: int) -> Path:
        return self.root / f"checkpoint_epoch{epoch:04d}.bin"


# ═══════════════════════════════════════════════════════════════════════════════
# JSON PERSISTENCE
# ═══════════════════════════════════════════════════════════════════════════════

def write_json(path, data: Dict[str, Any]) -> Path:
    """Write a JSON document with sorted keys (stable bytes across runs)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_jsonl(path, entries: Iterable[Dict[str, Any]]) -> Path:
    """Replace path with one JSON object per line (an empty file for no entries)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            f.write(json.dumps(entry, sort_keys=True) + "\n")
    return path


def append_jsonl(path, entry: Dict[str, Any]):
    """Append one entry to a line-delimited JSON log"""
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, sort_keys=True) + "\n")


def read_jsonl(path) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
