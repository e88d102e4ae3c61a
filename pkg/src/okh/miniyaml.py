"""Reader/writer for the restricted YAML-style markup used by manifest,
ruleset, and service-config files.

The grammar is deliberately a small subset of YAML so that documents
round-trip byte-deterministically:

  * top-level ``key: value`` mappings,
  * one level of nested mappings (two-space indent, scalar values),
  * block lists of flat mappings (``- key: value`` items, used by rulesets),
  * inline scalar lists ``[a, b, "c d"]``,
  * double-quoted scalars with ``\\ \" \n \t \r`` escapes,
  * full-line comments and blank lines.

No anchors, no multi-document streams, no type coercion: every scalar is
text.  ``docs/manifest-format.md`` documents the grammar with examples.
"""

from __future__ import annotations

import re
from typing import Union

Scalar = str
Value = Union[Scalar, list[Scalar], dict[str, Scalar], list[dict[str, Scalar]]]
Document = dict[str, Value]

_KEY_LINE = re.compile(r"^([A-Za-z0-9_-]+):(.*)$")
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


class MarkupError(ValueError):
    """Malformed document; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _indent_of(raw: str, lineno: int) -> int:
    n = 0
    for ch in raw:
        if ch == " ":
            n += 1
        elif ch == "\t":
            raise MarkupError("tabs are not allowed in indentation", lineno, n + 1)
        else:
            break
    return n


def _parse_quoted(text: str, lineno: int, start_col: int) -> tuple[str, int]:
    """Parse a double-quoted scalar starting at text[0]; return (value, consumed)."""
    assert text[0] == '"'
    out: list[str] = []
    i = 1
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                raise MarkupError("unterminated escape", lineno, start_col + i)
            esc = text[i + 1]
            if esc not in _ESCAPES:
                raise MarkupError(f"unsupported escape '\\{esc}'", lineno, start_col + i)
            out.append(_ESCAPES[esc])
            i += 2
        elif ch == '"':
            return "".join(out), i + 1
        else:
            out.append(ch)
            i += 1
    raise MarkupError("unterminated quoted scalar", lineno, start_col)


def _parse_inline_list(text: str, lineno: int, start_col: int) -> list[str]:
    assert text[0] == "["
    items: list[str] = []
    i = 1
    saw_item = False
    while True:
        while i < len(text) and text[i] == " ":
            i += 1
        if i >= len(text):
            raise MarkupError("unterminated inline list", lineno, start_col)
        if text[i] == "]":
            i += 1
            break
        if text[i] == '"':
            value, used = _parse_quoted(text[i:], lineno, start_col + i)
            i += used
        else:
            j = i
            while j < len(text) and text[j] not in ",]":
                if text[j] == "[":
                    raise MarkupError("nested lists are not supported", lineno, start_col + j)
                j += 1
            if j >= len(text):
                raise MarkupError("unterminated inline list", lineno, start_col)
            value = text[i:j].strip()
            if not value:
                raise MarkupError("empty unquoted list item", lineno, start_col + i)
            i = j
        items.append(value)
        saw_item = True
        while i < len(text) and text[i] == " ":
            i += 1
        if i >= len(text):
            raise MarkupError("unterminated inline list", lineno, start_col)
        if text[i] == ",":
            i += 1
        elif text[i] == "]":
            i += 1
            break
        else:
            raise MarkupError("expected ',' or ']' in inline list", lineno, start_col + i)
    trailing = text[i:].strip()
    if trailing:
        raise MarkupError("unexpected text after inline list", lineno, start_col + i)
    if not saw_item and items:
        raise MarkupError("malformed inline list", lineno, start_col)
    return items


def _parse_scalar_value(rest: str, lineno: int, col: int) -> str:
    if rest.startswith('"'):
        value, used = _parse_quoted(rest, lineno, col)
        trailing = rest[used:].strip()
        if trailing:
            raise MarkupError("unexpected text after quoted scalar", lineno, col + used)
        return value
    return rest.strip()


def _split_key(line: str, lineno: int, indent: int) -> tuple[str, str]:
    body = line[indent:]
    m = _KEY_LINE.match(body)
    if not m:
        raise MarkupError("expected 'key: value'", lineno, indent + 1)
    key, rest = m.group(1), m.group(2)
    if rest and not rest.startswith(" "):
        raise MarkupError("expected a space after ':'", lineno, indent + len(key) + 2)
    return key, rest[1:] if rest else ""


def parse(text: str) -> Document:
    """Parse a document into an ordered mapping of keys to values."""
    if text.startswith("﻿"):
        text = text[1:]
    doc: Document = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            i += 1
            continue
        indent = _indent_of(raw, lineno)
        if indent != 0:
            raise MarkupError("unexpected indentation", lineno, 1)
        key, rest = _split_key(raw, lineno, 0)
        if key in doc:
            raise MarkupError(f"duplicate key '{key}'", lineno, 1)
        if rest == "":
            value, i = _parse_block(lines, i + 1)
            doc[key] = value
            continue
        col = len(key) + 3
        if rest.startswith("["):
            doc[key] = _parse_inline_list(rest, lineno, col)
        else:
            doc[key] = _parse_scalar_value(rest, lineno, col)
        i += 1
    return doc


def _parse_block(lines: list[str], start: int) -> tuple[Value, int]:
    """Parse the indented block following a bare ``key:`` line.

    Returns a nested mapping or a list of flat mappings, plus the index of
    the first line after the block.  An empty block is an empty mapping.
    """
    i = start
    mode: str | None = None  # "map" or "list"
    mapping: dict[str, str] = {}
    items: list[dict[str, str]] = []
    current: dict[str, str] | None = None
    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            i += 1
            continue
        indent = _indent_of(raw, lineno)
        if indent == 0:
            break
        if raw[indent:].startswith("- "):
            if indent != 2:
                raise MarkupError("list items must be indented two spaces", lineno, 1)
            if mode == "map":
                raise MarkupError("cannot mix mapping entries and list items", lineno, 1)
            mode = "list"
            key, rest = _split_key(raw, lineno, 4)
            if rest == "" or rest.startswith("["):
                raise MarkupError("list item values must be scalars", lineno, 5)
            current = {key: _parse_scalar_value(rest, lineno, 5 + len(key) + 2)}
            items.append(current)
            i += 1
            continue
        if indent == 2:
            if mode == "list":
                raise MarkupError("cannot mix mapping entries and list items", lineno, 1)
            mode = "map"
            key, rest = _split_key(raw, lineno, 2)
            if key in mapping:
                raise MarkupError(f"duplicate key '{key}'", lineno, 3)
            if rest == "" or rest.startswith("["):
                raise MarkupError("nested values must be scalars", lineno, 3)
            mapping[key] = _parse_scalar_value(rest, lineno, 3 + len(key) + 2)
            i += 1
            continue
        if indent == 4:
            if mode != "list" or current is None:
                raise MarkupError("unexpected indentation", lineno, 1)
            key, rest = _split_key(raw, lineno, 4)
            if key in current:
                raise MarkupError(f"duplicate key '{key}'", lineno, 5)
            if rest == "" or rest.startswith("["):
                raise MarkupError("list item values must be scalars", lineno, 5)
            current[key] = _parse_scalar_value(rest, lineno, 5 + len(key) + 2)
            i += 1
            continue
        raise MarkupError("unexpected indentation", lineno, 1)
    if mode == "list":
        return items, i
    return mapping, i


def _needs_quotes(value: str, in_list: bool = False) -> bool:
    if value == "" or value != value.strip():
        return True
    if value[0] in '"[':
        return True
    if any(ch in "\n\t\r" or ord(ch) < 32 for ch in value):
        return True
    if in_list and any(ch in ",[]" for ch in value):
        return True
    return False


def _emit_scalar(value: str, in_list: bool = False) -> str:
    if not _needs_quotes(value, in_list):
        return value
    escaped = "".join(_UNESCAPES.get(ch, ch) for ch in value)
    return f'"{escaped}"'


def emit(doc: Document) -> str:
    """Serialize a document in canonical form (one key per line, lists
    inline, nested blocks two-space indented).  Inverse of `parse` for
    every document the grammar accepts."""
    out: list[str] = []
    for key, value in doc.items():
        if isinstance(value, str):
            out.append(f"{key}: {_emit_scalar(value)}")
        elif isinstance(value, dict):
            out.append(f"{key}:")
            for sub, sval in value.items():
                out.append(f"  {sub}: {_emit_scalar(sval)}")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            out.append(f"{key}:")
            for item in value:
                first = True
                for sub, sval in item.items():
                    prefix = "  - " if first else "    "
                    out.append(f"{prefix}{sub}: {_emit_scalar(sval)}")
                    first = False
        elif isinstance(value, list):
            inner = ", ".join(_emit_scalar(v, in_list=True) for v in value)
            out.append(f"{key}: [{inner}]")
        else:
            raise TypeError(f"unsupported value type for key '{key}': {type(value)!r}")
    return "\n".join(out) + "\n" if out else ""
