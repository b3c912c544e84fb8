"""Flat ``key = value`` configuration files.

Grammar, one entry per line::

    # comment            (also after a value: "r = 0.5  # note")
    key = value
    key: value

Keys are the long CLI option names with ``-`` or ``_`` (``p-ratio`` and
``p_ratio`` are the same key).  Blank lines are ignored, surrounding quotes
on values are stripped, and a repeated key keeps its last value.
"""

from __future__ import annotations

import os
import re
from pathlib import Path

from .errors import RejectedInputError

ENV_VAR = "FTQC_CONFIG"

_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_\-]*)\s*[=:]\s*(.*?)\s*$")


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_").lower()


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _LINE.match(line)
        if not m:
            raise RejectedInputError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = normalize_key(m.group(1)), m.group(2)
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key] = value
    return out


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if ch in "\"'":
            quote = None if quote == ch else (quote or ch)
        elif ch == "#" and quote is None:
            return line[:i]
    return line


def load_config(path: str | os.PathLike | None) -> tuple[dict[str, str], str | None]:
    """Read ``path``, or ``$FTQC_CONFIG`` when ``path`` is None; ``({}, None)`` if neither."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return {}, None
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise RejectedInputError(f"cannot read config file {p}: {exc.strerror}") from exc
    return parse_config(text, str(p)), str(p)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise RejectedInputError(f"expected a boolean (true/false), got {value!r}")
