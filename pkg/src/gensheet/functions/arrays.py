"""Parsing of the array literals returned by list functions.

Provider output is adversarial: accept a single array literal with single-
or double-quoted string items and surrounding whitespace, nothing else.
"""

from __future__ import annotations

import ast
import json


class ArrayLiteralError(ValueError):
    pass


def parse_array_literal(text: str) -> list[str]:
    stripped = text.strip()
    if not stripped.startswith("["):
        raise ArrayLiteralError(f"not an array literal: {text[:80]!r}")
    value = None
    try:
        value = json.loads(stripped)
    except json.JSONDecodeError:
        try:
            # Accepts single-quoted items, which JSON rejects.
            value = ast.literal_eval(stripped)
        except (ValueError, SyntaxError) as exc:
            raise ArrayLiteralError(f"malformed array literal: {text[:80]!r}") from exc
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ArrayLiteralError(f"expected an array of strings: {text[:80]!r}")
    return value
