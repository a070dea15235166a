import time
from pathlib import Path

import pytest

from habitminer import synthgen
from habitminer.analysis import analyze
from habitminer.engine import EngineConfig, run_engine

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bench():
    """The seeded 4-pattern benchmark (N = 500) with its ground truth."""
    return synthgen.benchmark(0)


@pytest.fixture(scope="session")
def bench_run(bench):
    """Default-configuration LD-ABCD run (seed 0) on the benchmark, with its wall time."""
    ds, _ = bench
    t = time.perf_counter()
    run = analyze(run_engine(ds, EngineConfig(seed=0)), len(ds))
    return run, time.perf_counter() - t


@pytest.fixture(scope="session")
def data_dir():
    return DATA


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}")
