import os
import sys

import pytest

from gensheet.engine import Engine, SyncDispatcher, Workbook
from gensheet.functions.images import MockTtiUpstream, warm_kernel
from gensheet.functions.mockllm import MockLlmUpstream
from gensheet.proxy.service import GenerationService


@pytest.fixture()
def service(tmp_path):
    return GenerationService(
        tti_upstream=MockTtiUpstream(),
        llm_upstream=MockLlmUpstream(),
        cache_dir=tmp_path / "cache",
        timeout_secs=10.0,
    )


@pytest.fixture()
def engine(service):
    workbook = Workbook()
    workbook.add_sheet("Sheet1")
    return Engine(workbook, SyncDispatcher(service))


@pytest.fixture(scope="session", autouse=True)
def _warm_image_kernel():
    # One-off numba compile so no individual test pays for it.
    warm_kernel()


# -- acceptance reporting ------------------------------------------------------

_acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    if "test_acceptance" in item.nodeid:
        criterion = item.get_closest_marker("criterion")
        name = criterion.args[0] if criterion else item.name
        _acceptance_results.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _acceptance_results:
        terminalreporter.write_line(f"  {status}  {name}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")
