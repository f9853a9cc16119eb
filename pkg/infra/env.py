import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from app.config import OUTPUT_DIR_ENV

load_dotenv()


def output_dir_override() -> Optional[str]:
    value = os.getenv(OUTPUT_DIR_ENV)
    return value or None


def resolve_output_dir(configured: str) -> Path:
    """The configured run directory unless GSPRUNE_OUTPUT_DIR is set"""
    return Path(output_dir_override() or configured)
