"""Dispatchers: carry queued generation requests to the service and feed
results back in as resolve_pending commands.

SyncDispatcher resolves inline (CLI evaluation, tests); ThreadedDispatcher
resolves from worker threads (serve mode). Either way provider work runs
through the generation service, so caching and coalescing always apply.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

from ..functions.arrays import ArrayLiteralError, parse_array_literal
from ..functions.model import GenerationKey, LlmRequest
from ..functions.registry import FunctionKind
from ..proxy.service import GenerationService, UpstreamError
from .engine import DispatchItem, Engine, ListResult
from .values import Error, ErrorKind, Image, Text, Value

logger = logging.getLogger("gensheet.dispatch")


class GenerationFailed(RuntimeError):
    pass


def fetch_list_items(service: GenerationService, request: LlmRequest) -> tuple[str, ...]:
    """Fetch and validate a list completion.

    A longer list truncates to the requested length; a malformed or short
    list gets one fresh request, after which the failure surfaces.
    """
    assert request.expected_length is not None
    failure = "provider returned no list"
    for _ in range(2):
        text = service.serve_llm(request)
        try:
            items = parse_array_literal(text)
        except ArrayLiteralError as exc:
            failure = str(exc)
            continue
        if len(items) >= request.expected_length:
            return tuple(items[: request.expected_length])
        failure = (
            f"provider returned {len(items)} items, expected {request.expected_length}"
        )
    raise GenerationFailed(failure)


def execute_item(service: GenerationService, item: DispatchItem) -> Value | ListResult:
    """Run one dispatch item to completion, mapping failures to #GEN_ERR."""
    plan = item.plan
    try:
        if plan.kind is FunctionKind.TTI:
            assert isinstance(plan.payload, GenerationKey)
            result = service.serve_tti(plan.payload)
            return Image(result.to_image_ref())
        if plan.kind is FunctionKind.LLM_LIST:
            assert isinstance(plan.payload, LlmRequest)
            return ListResult(items=fetch_list_items(service, plan.payload))
        assert isinstance(plan.payload, LlmRequest)
        return Text(service.serve_llm(plan.payload))
    except (UpstreamError, GenerationFailed) as exc:
        return Error(ErrorKind.GEN, str(exc))
    except Exception as exc:  # noqa: BLE001 - a failed cell, not a crashed engine
        logger.exception("unexpected provider failure")
        return Error(ErrorKind.GEN, f"unexpected provider failure: {exc}")


class SyncDispatcher:
    """Resolves every request before dispatch() returns. Image batches go
    through dispatch_parallel so unique keys still fan out concurrently."""

    synchronous = True

    def __init__(self, service: GenerationService):
        self.service = service

    def dispatch(self, engine: Engine, items: list[DispatchItem]) -> None:
        tti_items = [i for i in items if i.plan.kind is FunctionKind.TTI]
        other_items = [i for i in items if i.plan.kind is not FunctionKind.TTI]
        if tti_items:
            keys = [i.plan.payload for i in tti_items]
            results = self.service.dispatch_parallel(keys)  # type: ignore[arg-type]
            for item in tti_items:
                outcome = results[item.plan.payload]  # type: ignore[index]
                if isinstance(outcome, Exception):
                    value: Value = Error(ErrorKind.GEN, str(outcome))
                else:
                    value = Image(outcome.to_image_ref())
                engine.resolve_pending(item.request_id, value)
        for item in other_items:
            engine.resolve_pending(item.request_id, execute_item(self.service, item))


class ThreadedDispatcher:
    """Submits requests to a worker pool; resolutions re-enter the engine as
    commands from those threads."""

    synchronous = False

    def __init__(self, service: GenerationService, max_workers: int | None = None):
        self.service = service
        self._pool = ThreadPoolExecutor(
            max_workers=max_workers or service.parallelism,
            thread_name_prefix="gensheet-dispatch",
        )

    def dispatch(self, engine: Engine, items: list[DispatchItem]) -> None:
        for item in items:
            self._pool.submit(self._run, engine, item)

    def _run(self, engine: Engine, item: DispatchItem) -> None:
        engine.resolve_pending(item.request_id, execute_item(self.service, item))

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)


class CollectingDispatcher:
    """Holds dispatched items for tests that resolve requests by hand."""

    synchronous = False

    def __init__(self) -> None:
        self.items: list[DispatchItem] = []

    def dispatch(self, engine: Engine, items: list[DispatchItem]) -> None:
        self.items.extend(items)
