"""File helpers used by the management commands."""

from __future__ import annotations

import logging
from pathlib import Path

from core.types import InputError

from .grammar import parse_evidence, parse_program
from .program import MLNProgram

logger = logging.getLogger(__name__)


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"No such file: {path}") from None
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not UTF-8 text: {exc}") from exc


def load_program(
    program_path: str | Path, evidence_path: str | Path | None = None
) -> MLNProgram:
    """
    Read and parse a program file and, optionally, an evidence file.

    Raises:
        InputError: Missing or unreadable file, or any parse error.
    """
    program = parse_program(_read(program_path))
    if evidence_path is not None:
        program = parse_evidence(_read(evidence_path), program)
    logger.info(
        "Loaded %s: %d rule(s), %d evidence atom(s)",
        program_path,
        len(program.rules),
        len(program.evidence),
    )
    return program
