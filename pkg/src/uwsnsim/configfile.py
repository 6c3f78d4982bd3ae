"""Flat key=value experiment configuration files.

One assignment per line, ``#`` starts a comment, blank lines ignored.  Keys
are restricted to [A-Za-z0-9_.-].  Parsing never half-succeeds: any problem
raises ConfigError with a line/column diagnostic.  ``format_config`` emits a
document that parses back to the same mapping.
"""

from __future__ import annotations

import re

__all__ = ["ConfigError", "parse_config", "parse_config_file", "format_config"]

_KEY_RE = re.compile(r"[A-Za-z0-9_.-]+")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, value = line.split("=", 1)
        key = key_part.strip()
        if not key:
            raise ConfigError("empty key", lineno, 1)
        m = _KEY_RE.fullmatch(key)
        if not m:
            col = line.index(key) + 1
            raise ConfigError(f"invalid key {key!r}", lineno, col)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, line.index(key) + 1)
        out[key] = value.strip()
    return out


def parse_config_file(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc.args[0].split(': ', 1)[-1]}",
                          exc.line, exc.col) from None


def format_config(values: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())
