"""Wiring helpers: build a generation service and an engine from settings
and environment configuration."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .engine.dispatch import SyncDispatcher, ThreadedDispatcher
from .engine.engine import Engine
from .engine.workbook import Workbook
from .functions.images import MockTtiUpstream
from .functions.mockllm import MockLlmUpstream
from .proxy.service import (
    DEFAULT_PARALLELISM,
    DEFAULT_TIMEOUT_SECS,
    GenerationService,
)

ENV_CACHE_DIR = "GENSHEET_CACHE_DIR"
ENV_PARALLELISM = "PROXY_PARALLELISM"
ENV_TIMEOUT = "PROXY_TIMEOUT_SECS"


def default_cache_dir() -> Path:
    configured = os.environ.get(ENV_CACHE_DIR)
    if configured:
        return Path(configured)
    return Path(tempfile.gettempdir()) / "gensheet-cache"


def build_service(
    providers: str = "mock",
    cache_dir: str | Path | None = None,
    parallelism: int | None = None,
    timeout_secs: float | None = None,
    cache_llm: bool = False,
) -> GenerationService:
    if parallelism is None:
        parallelism = int(os.environ.get(ENV_PARALLELISM, DEFAULT_PARALLELISM))
    if timeout_secs is None:
        timeout_secs = float(os.environ.get(ENV_TIMEOUT, DEFAULT_TIMEOUT_SECS))
    if providers == "mock":
        tti = MockTtiUpstream()
        llm = MockLlmUpstream()
    elif providers == "live":
        from .functions.live import OpenAiChatUpstream, StabilityUpstream

        tti = StabilityUpstream(timeout=timeout_secs)
        llm = OpenAiChatUpstream(timeout=timeout_secs)
    else:
        raise ValueError(f"unknown provider profile {providers!r}")
    return GenerationService(
        tti_upstream=tti,
        llm_upstream=llm,
        cache_dir=cache_dir or default_cache_dir(),
        parallelism=parallelism,
        timeout_secs=timeout_secs,
        cache_llm=cache_llm,
    )


@dataclass
class Runtime:
    engine: Engine
    service: GenerationService
    dispatcher: object

    def close(self) -> None:
        shutdown = getattr(self.dispatcher, "shutdown", None)
        if shutdown is not None:
            shutdown()


def build_runtime(
    workbook: Workbook,
    mock: bool | None = None,
    cache_dir: str | Path | None = None,
    parallelism: int | None = None,
    timeout_secs: float | None = None,
    threaded: bool = False,
) -> Runtime:
    """Engine plus service for a workbook. ``mock=None`` follows the
    workbook's provider profile; ``mock=True`` forces offline providers."""
    profile = workbook.settings.providers
    if mock is True:
        profile = "mock"
    elif mock is False:
        profile = "live"
    service = build_service(
        providers=profile,
        cache_dir=cache_dir,
        parallelism=parallelism,
        timeout_secs=timeout_secs,
    )
    dispatcher = (
        ThreadedDispatcher(service) if threaded else SyncDispatcher(service)
    )
    engine = Engine(workbook, dispatcher)
    return Runtime(engine=engine, service=service, dispatcher=dispatcher)
