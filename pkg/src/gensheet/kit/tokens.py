"""Dynamic-token resolution and regeneration."""

from __future__ import annotations

from dataclasses import replace

from ..engine.dispatch import fetch_list_items
from ..engine.engine import Engine
from ..engine.values import Blank, Error, coerce_text
from ..functions.messages import build_list_request, build_scalar_request
from ..functions.registry import FunctionKind, lookup
from ..proxy.service import GenerationService
from .model import (
    AxisSource,
    CellRangeSource,
    DynamicToken,
    GenerativeList,
    InvalidValue,
    ManualList,
)


def resolve_axis_items(
    source: AxisSource,
    service: GenerationService | None = None,
    engine: Engine | None = None,
) -> list[str]:
    """Materialize an axis source into its current items.

    Generative sources need the generation service; range sources need the
    engine the range lives in. Provider failures propagate as exceptions.
    """
    if isinstance(source, ManualList):
        if not source.items:
            raise InvalidValue("manual source has no items")
        return list(source.items)
    if isinstance(source, CellRangeSource):
        if engine is None:
            raise InvalidValue("a range source needs an engine to read from")
        items: list[str] = []
        for addr in source.range.cells():
            value = engine.get_value(addr)
            if isinstance(value, Blank):
                continue
            text = coerce_text(value)
            if isinstance(text, Error):
                raise InvalidValue(f"range cell {addr.to_a1()} holds {text.kind.value}")
            items.append(text)
        if not items:
            raise InvalidValue("range source resolved to no items")
        return items
    if service is None:
        raise InvalidValue("a generative source needs the generation service")
    if not source.input.strip():
        raise InvalidValue("generator input must be non-empty")
    spec = lookup(source.function)
    if spec is None:
        raise InvalidValue(f"unknown function {source.function!r}")
    if spec.kind is FunctionKind.LLM_LIST:
        request = build_list_request(spec, source.input, source.length)
        return list(fetch_list_items(service, request))
    if spec.kind in (FunctionKind.EMBELLISH, FunctionKind.GPT):
        request = build_scalar_request(spec, source.input)
        return [service.serve_llm(request)]
    raise InvalidValue(f"{source.function} cannot generate token items")


def regenerate_token(
    token: DynamicToken,
    service: GenerationService | None = None,
    engine: Engine | None = None,
) -> DynamicToken:
    """A fresh resolution of the token's generator; items swap atomically."""
    items = resolve_axis_items(token.generator, service=service, engine=engine)
    return replace(token, items=tuple(items))
