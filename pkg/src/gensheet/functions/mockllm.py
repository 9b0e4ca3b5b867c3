"""Deterministic offline LLM provider used for all testing.

List requests yield ``["<slug>-1", ..., "<slug>-N"]`` where the slug is the
assembled prompt lowercased with non-alphanumeric runs collapsed to ``-``;
scalar requests echo the function name around the input.
"""

from __future__ import annotations

import json
import re

from .messages import EMBELLISH_PREFIX
from .model import LlmRequest

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(text: str) -> str:
    slug = _SLUG_RE.sub("-", text.lower()).strip("-")
    return slug or "item"


class MockLlmUpstream:
    """Callable matching the LLM upstream interface: request -> completion text."""

    def __call__(self, request: LlmRequest) -> str:
        if request.expects_list:
            content = request.messages[-1][1]
            prompt = content.rsplit(" (length: ", 1)[0]
            assert request.expected_length is not None
            slug = slugify(prompt)
            items = [f"{slug}-{i}" for i in range(1, request.expected_length + 1)]
            return json.dumps(items)
        content = request.messages[-1][1]
        if content.startswith(EMBELLISH_PREFIX):
            return f"EMBELLISH({content[len(EMBELLISH_PREFIX):]})"
        return f"GPT({content})"
