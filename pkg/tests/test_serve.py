"""Serve mode against a real server: concurrent clients, the live event
stream, and request coalescing through the HTTP boundary."""

import json
import socket
import threading
import time

import httpx
import pytest
import uvicorn

from gensheet.engine import Engine, Workbook
from gensheet.engine.dispatch import ThreadedDispatcher
from gensheet.functions.mockllm import MockLlmUpstream
from gensheet.httpapi import WorkbookSession, create_app
from gensheet.proxy.service import GenerationService
from gensheet.runtime import Runtime


class CountingTti:
    def __init__(self):
        self.calls = []
        self.lock = threading.Lock()

    def __call__(self, key):
        with self.lock:
            self.calls.append(key)
        time.sleep(0.02)
        return b"png" + key.digest().encode()[:8]


@pytest.fixture()
def server(tmp_path):
    workbook = Workbook()
    workbook.add_sheet("Sheet1")
    upstream = CountingTti()
    service = GenerationService(
        tti_upstream=upstream,
        llm_upstream=MockLlmUpstream(),
        cache_dir=tmp_path / "cache",
        timeout_secs=10.0,
    )
    dispatcher = ThreadedDispatcher(service)
    engine = Engine(workbook, dispatcher)
    runtime = Runtime(engine=engine, service=service, dispatcher=dispatcher)
    session = WorkbookSession(runtime, path=tmp_path / "book.gws")
    app = create_app(session)

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    yield {
        "url": f"http://127.0.0.1:{port}",
        "upstream": upstream,
        "session": session,
    }
    server.should_exit = True
    thread.join(timeout=5)
    runtime.close()


def test_event_stream_emits_changes(server):
    url = server["url"]
    received = {}
    ready = threading.Event()

    def consume():
        with httpx.stream("GET", f"{url}/api/events", timeout=10) as stream:
            ready.set()
            for line in stream.iter_lines():
                if line.startswith("data:"):
                    received.update(json.loads(line[5:]))
                    return

    consumer = threading.Thread(target=consume, daemon=True)
    consumer.start()
    assert ready.wait(5)
    time.sleep(0.2)  # subscription races the first edit otherwise
    httpx.post(
        f"{url}/api/cells",
        json={"sheet": "Sheet1", "address": "A1", "input": '=TTI("cat", 1)'},
        timeout=10,
    )
    consumer.join(timeout=10)
    assert not consumer.is_alive(), "no event arrived"
    assert received["changes"]


def test_concurrent_duplicate_tti_posts_single_upstream(server):
    url = server["url"]
    body = {"prompt": "coalesce me", "seed": 11, "cfg": 7.0}
    results = []

    def post():
        results.append(httpx.post(f"{url}/tti", json=body, timeout=15).json()["id"])

    threads = [threading.Thread(target=post) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1
    assert len(server["upstream"].calls) == 1


def test_edit_resolves_to_image_via_polling(server):
    url = server["url"]
    httpx.post(
        f"{url}/api/cells",
        json={"sheet": "Sheet1", "address": "B1", "input": '=TTI("poll", 2)'},
        timeout=10,
    )
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        value = httpx.get(f"{url}/api/cells/Sheet1/B1", timeout=10).json()["value"]
        if value["kind"] == "image":
            return
        time.sleep(0.05)
    pytest.fail(f"cell never resolved: {value}")
