"""Flat one-line table serialization for model consumption.

Pinned format:

    col : h1 | h2 | ... row 1 : c11 | c12 | ... row 2 : c21 | ...

Separators are single-space padded.  Pipes, backslashes and newlines inside
a value are backslash-escaped ("\\|", "\\\\", "\\n") so the rendering stays
one line and parses back to the exact grid.  Golden tests pin the format
bit-exactly; do not restyle it.
"""

from __future__ import annotations

import re

from .core import Table

_ESCAPES = {"\\": "\\\\", "|": "\\|", "\n": "\\n"}
_UNESCAPES = {"\\": "\\", "|": "|", "n": "\n"}


def _escape(value: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def _unescape(value: str) -> str:
    out = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value) and value[i + 1] in _UNESCAPES:
            out.append(_UNESCAPES[value[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def serialize(table: Table) -> str:
    parts = ["col : " + " | ".join(_escape(h) for h in table.headers)]
    for i, row in enumerate(table.rows, 1):
        parts.append(f"row {i} : " + " | ".join(_escape(c.raw) for c in row))
    return " ".join(parts)


def _split_fields(segment: str) -> list[str]:
    """Split on " | " separators whose pipe is not escaped."""
    fields = []
    current = []
    i = 0
    while i < len(segment):
        ch = segment[i]
        if ch == "\\" and i + 1 < len(segment):
            current.append(ch)
            current.append(segment[i + 1])
            i += 2
            continue
        if ch == "|" and segment[i - 1 : i] == " " and segment[i + 1 : i + 2] == " ":
            field = "".join(current)
            fields.append(field[:-1] if field.endswith(" ") else field)
            current = []
            i += 2
            continue
        current.append(ch)
        i += 1
    fields.append("".join(current))
    return [_unescape(f) for f in fields]


def parse_serialized(text: str) -> Table:
    """Inverse of serialize for escaped content.

    Row markers are located in order ("row 1 : " then "row 2 : " ...), so a
    cell containing the exact next marker text would mis-split; escaped
    pipes, backslashes and newlines round-trip exactly.
    """
    if not text.startswith("col : "):
        raise ValueError("serialized table must start with 'col : '")
    body = text[len("col : "):]
    segments = []
    row_index = 1
    while True:
        marker = f" row {row_index} : "
        pos = body.find(marker)
        if pos < 0:
            segments.append(body)
            break
        segments.append(body[:pos])
        body = body[pos + len(marker):]
        row_index += 1
    headers = _split_fields(segments[0])
    grid = [_split_fields(seg) for seg in segments[1:]]
    return Table.from_values(headers, grid)


_WS = re.compile(r"\s+")


def token_count(instance) -> int:
    """Whitespace-split token count of serialized table plus question."""
    table_tokens = len([t for t in _WS.split(serialize(instance.table)) if t])
    question_tokens = len([t for t in _WS.split(instance.question) if t])
    return table_tokens + question_tokens


def length_filter(instances, max_tokens: int):
    """Partition into (kept, dropped) by the token budget of the flat form."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    kept, dropped = [], []
    for instance in instances:
        (kept if token_count(instance) <= max_tokens else dropped).append(instance)
    return kept, dropped
