"""
Utility functions for the mapping pipeline.

File helpers shared by the subcommands: id lists, output routing and
input/output path checks, plus logging setup.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Iterable

from sdg.common import UsageError

LOG_FORMAT = "%(message)s"


def setup_logging(level: str = "INFO") -> None:
    """
    Send diagnostics to stderr; stdout is reserved for command results.

    Args:
        level: Logging level name (DEBUG, INFO, WARNING, ERROR)
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level.upper())


def load_id_list(path: str | Path) -> list[str]:
    """
    Load a file containing one record id per line.

    A mapping file (JSON lines with an `id` key) is accepted as well.

    Returns:
        Ids in file order, blanks skipped
    """
    ids: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                ids.append(str(json.loads(line)["id"]))
            else:
                ids.append(line)
    return ids


def check_distinct_paths(inputs: Iterable[str | Path | None], outputs: Iterable[str | Path | None]) -> None:
    """
    Reject an output path that names one of the inputs.

    Raises:
        UsageError: If an output resolves to an input path
    """
    resolved = {Path(p).resolve() for p in inputs if p}
    for out in outputs:
        if out and Path(out).resolve() in resolved:
            raise UsageError(f"output path {out} is also an input; choose another path")


def emit(text: str, path: str | Path | None = None) -> None:
    """Write a result to `path`, or to stdout when no path is given."""
    if not text:
        return
    if not text.endswith("\n"):
        text += "\n"
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def json_lines(rows: Iterable[dict]) -> str:
    return "\n".join(json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows)
