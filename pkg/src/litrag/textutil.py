"""Small text helpers shared across modules.

Word counting is whitespace tokenization everywhere so that chunk sizes,
context word counts, and table averages are internally consistent.
"""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")

# "1. text" / "2) text" / "3: text"
_NUMBERED = re.compile(r"^\s*(\d+)\s*[.):]\s*(.+?)\s*$")


def word_count(text: str) -> int:
    """Number of whitespace-separated tokens."""
    return len(text.split())


def collapse_ws(text: str) -> str:
    """Collapse all whitespace runs to single spaces and trim."""
    return _WS.sub(" ", text).strip()


def parse_numbered_lines(text: str) -> list[tuple[int, str]]:
    """Parse 'N. item' lines; lines that do not match are skipped."""
    out: list[tuple[int, str]] = []
    for line in text.splitlines():
        m = _NUMBERED.match(line)
        if m:
            out.append((int(m.group(1)), m.group(2)))
    return out


def parse_yes_no(item: str) -> bool | None:
    """Interpret a judge verdict item as yes/no; None when neither."""
    token = item.strip().strip(".").lower()
    if token in ("yes", "y", "true", "relevant", "supported"):
        return True
    if token in ("no", "n", "false", "irrelevant", "unsupported"):
        return False
    return None
