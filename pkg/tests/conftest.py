from __future__ import annotations

import pytest

from skyline import ExponentialHeights, ParetoHeights, UrbanConfig

_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def unit_city():
    return UrbanConfig(1.0, 1.0, ExponentialHeights(1.0))


@pytest.fixture
def sparse_city():
    return UrbanConfig(0.1, 1.0, ExponentialHeights(1.0))


@pytest.fixture
def pareto_city():
    return UrbanConfig(1.0, 1.0, ParetoHeights(1.5, 1.0 / 3.0))


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict, then assert it."""

    def record(number: int, ok: bool, detail: str):
        request.config.stash[_RESULTS].append((number, bool(ok), detail))
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = sorted(config.stash[_RESULTS])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in results:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
