"""Generation service: the mediator between formula evaluation and providers.

Responsibilities: content-addressed caching of image generations,
single-flight coalescing so at most one upstream call per key is ever in
flight, bounded-parallelism dispatch, and a hard per-request time budget.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from ..functions.model import GenerationKey, IMAGE_SIZE, LlmRequest, TtiResult
from .blobstore import BlobStore

DEFAULT_PARALLELISM = 8
DEFAULT_TIMEOUT_SECS = 30.0
# Extra wait granted to coalesced waiters beyond the leader's budget.
SCHEDULING_SLACK_SECS = 2.0


class UpstreamError(RuntimeError):
    """Provider call failed; maps to a 502 at the HTTP boundary."""


class UpstreamTimeout(UpstreamError):
    """Provider call exceeded the time budget; maps to a 504."""


class InvalidBatch(ValueError):
    pass


@dataclass
class _Flight:
    done: threading.Event = field(default_factory=threading.Event)
    result: TtiResult | None = None
    error: Exception | None = None


@dataclass
class CacheStats:
    entries: int
    bytes: int
    hits: int
    misses: int
    coalesced: int

    def as_dict(self) -> dict[str, int]:
        return {
            "entries": self.entries,
            "bytes": self.bytes,
            "hits": self.hits,
            "misses": self.misses,
            "coalesced": self.coalesced,
        }


class GenerationService:
    def __init__(
        self,
        tti_upstream: Callable[[GenerationKey], bytes],
        llm_upstream: Callable[[LlmRequest], str],
        cache_dir: str | Path,
        parallelism: int = DEFAULT_PARALLELISM,
        timeout_secs: float = DEFAULT_TIMEOUT_SECS,
        cache_llm: bool = False,
    ):
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        self.tti_upstream = tti_upstream
        self.llm_upstream = llm_upstream
        self.blobs = BlobStore(cache_dir)
        self.parallelism = parallelism
        self.timeout_secs = timeout_secs
        self.cache_llm = cache_llm
        self._llm_cache_dir = Path(cache_dir) / "llm"
        self._flights: dict[str, _Flight] = {}
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0
        self._coalesced = 0
        # Bounds concurrent upstream work; callers block on the budget, not
        # on slot availability (queue time counts against the budget).
        self._tti_slots = threading.BoundedSemaphore(parallelism)
        self._llm_slots = threading.BoundedSemaphore(parallelism)

    # -- image generation ---------------------------------------------------

    def serve_tti(self, key: GenerationKey) -> TtiResult:
        """Cache hit returns immediately; a miss joins or creates the
        single in-flight upstream call for this key."""
        digest = key.digest()
        if self.blobs.has(digest):
            with self._lock:
                self._hits += 1
            return self._result(digest, from_cache=True)

        with self._lock:
            flight = self._flights.get(digest)
            leader = flight is None
            if leader:
                flight = _Flight()
                self._flights[digest] = flight
            else:
                self._coalesced += 1
        assert flight is not None

        if not leader:
            if not flight.done.wait(self.timeout_secs + SCHEDULING_SLACK_SECS):
                raise UpstreamTimeout(
                    f"timeout: image request exceeded {self.timeout_secs:g}s budget"
                )
            if flight.error is not None:
                raise flight.error
            assert flight.result is not None
            return flight.result

        try:
            # The blob may have landed between the cache check and flight
            # creation; never call upstream twice for one key.
            if self.blobs.has(digest):
                with self._lock:
                    self._hits += 1
                flight.result = self._result(digest, from_cache=True)
                return flight.result
            with self._lock:
                self._misses += 1
            data = self._call_with_budget(self.tti_upstream, key, self._tti_slots)
            if not isinstance(data, bytes) or not data:
                raise UpstreamError("provider returned no image data")
            self.blobs.put(digest, data)
            flight.result = self._result(digest, from_cache=False)
            return flight.result
        except Exception as exc:
            if not isinstance(exc, UpstreamError):
                exc = UpstreamError(f"provider failure: {exc}")
            flight.error = exc
            raise exc
        finally:
            with self._lock:
                self._flights.pop(digest, None)
            flight.done.set()

    def _result(self, digest: str, from_cache: bool) -> TtiResult:
        return TtiResult(
            digest=digest,
            path=str(self.blobs.path_for(digest)),
            width=IMAGE_SIZE,
            height=IMAGE_SIZE,
            from_cache=from_cache,
        )

    def dispatch_parallel(
        self, keys: Iterable[GenerationKey]
    ) -> dict[GenerationKey, TtiResult | Exception]:
        """Dispatch a batch; duplicates coalesce and per-key failures stay
        isolated from the rest of the batch."""
        ordered = list(keys)
        if not ordered:
            raise InvalidBatch("empty generation batch")
        unique: dict[GenerationKey, None] = dict.fromkeys(ordered)
        results: dict[GenerationKey, TtiResult | Exception] = {}
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            futures = {key: pool.submit(self.serve_tti, key) for key in unique}
            for key, future in futures.items():
                try:
                    results[key] = future.result()
                except Exception as exc:
                    results[key] = exc
        return results

    def image_bytes(self, digest: str) -> bytes | None:
        return self.blobs.get(digest)

    # -- LLM completion -----------------------------------------------------

    def serve_llm(self, request: LlmRequest) -> str:
        """Forward to the LLM provider. Responses are not cached unless the
        service was built with cache_llm=True (deterministic replay)."""
        if not request.messages:
            raise InvalidBatch("empty message list")
        cache_path = None
        if self.cache_llm:
            cache_path = self._llm_cache_dir / f"{self._llm_digest(request)}.json"
            if cache_path.is_file():
                return json.loads(cache_path.read_text())["text"]
        text = self._call_with_budget(self.llm_upstream, request, self._llm_slots)
        if not isinstance(text, str):
            raise UpstreamError("provider returned a non-text completion")
        if cache_path is not None:
            self._llm_cache_dir.mkdir(parents=True, exist_ok=True)
            cache_path.write_text(json.dumps({"text": text}))
        return text

    @staticmethod
    def _llm_digest(request: LlmRequest) -> str:
        payload = json.dumps(
            {
                "messages": list(request.messages),
                "expects_list": request.expects_list,
                "expected_length": request.expected_length,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    # -- shared plumbing ----------------------------------------------------

    def _call_with_budget(self, fn, arg, slots: threading.BoundedSemaphore):
        """Run fn(arg) on a daemon thread under the parallelism limit and
        wait at most the configured budget (queue time included)."""
        done = threading.Event()
        box: dict[str, object] = {}

        def run() -> None:
            with slots:
                if box.get("abandoned"):
                    return
                try:
                    box["value"] = fn(arg)
                except Exception as exc:  # noqa: BLE001 - propagated to caller
                    box["error"] = exc
                finally:
                    done.set()

        worker = threading.Thread(target=run, daemon=True)
        worker.start()
        if not done.wait(self.timeout_secs):
            box["abandoned"] = True
            raise UpstreamTimeout(
                f"timeout: request exceeded {self.timeout_secs:g}s budget"
            )
        if "error" in box:
            error = box["error"]
            if isinstance(error, UpstreamError):
                raise error
            raise UpstreamError(f"provider failure: {error}") from error  # type: ignore[arg-type]
        return box["value"]

    # -- stats ----------------------------------------------------------------

    def cache_stats(self) -> CacheStats:
        with self._lock:
            hits, misses, coalesced = self._hits, self._misses, self._coalesced
        return CacheStats(
            entries=len(self.blobs.entries()),
            bytes=self.blobs.total_bytes(),
            hits=hits,
            misses=misses,
            coalesced=coalesced,
        )
