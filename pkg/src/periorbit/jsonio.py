"""Deterministic JSON serialization.

Reports must be byte-identical across runs of the same configuration, so
floats are rendered with a fixed 17-significant-digit format instead of
whatever ``repr`` happens to shorten to, and mappings keep their insertion
order.  Only the JSON-representable types the package actually produces
are supported.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    s = f"{x:.17g}"
    # keep integral floats recognizably floats
    if "e" not in s and "E" not in s and "." not in s:
        s += ".0"
    return s


def _escape(s: str) -> str:
    out = ["\""]
    for ch in s:
        if ch == "\"":
            out.append("\\\"")
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append("\"")
    return "".join(out)


def _encode(obj, parts: list, indent: int):
    pad = "  " * indent
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(format_float(float(obj)))
    elif isinstance(obj, str):
        parts.append(_escape(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), parts, indent)
    elif isinstance(obj, (list, tuple)):
        if not obj:
            parts.append("[]")
            return
        parts.append("[\n")
        for k, item in enumerate(obj):
            parts.append(pad + "  ")
            _encode(item, parts, indent + 1)
            parts.append(",\n" if k < len(obj) - 1 else "\n")
        parts.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        items = list(obj.items())
        for k, (key, value) in enumerate(items):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            parts.append(pad + "  " + _escape(key) + ": ")
            _encode(value, parts, indent + 1)
            parts.append(",\n" if k < len(items) - 1 else "\n")
        parts.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps(obj) -> str:
    parts: list[str] = []
    _encode(obj, parts, 0)
    parts.append("\n")
    return "".join(parts)


def dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def sha256_of(obj) -> str:
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()
