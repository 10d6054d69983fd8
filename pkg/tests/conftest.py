"""Shared fixtures and the acceptance-criterion summary printer."""
import time

import pytest

from dram_mapper import fixtures
from dram_mapper.pipeline import PipelineConfig, run_pipeline, simulated_backend

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({title}): {verdict} [{detail}]")


@pytest.fixture(scope="session")
def clean_runs():
    """One noise-free pipeline run per fixture at the default seed.

    Values are (result, knowledge, truth, wall_seconds); several test modules
    and most acceptance criteria read from these runs.
    """
    runs = {}
    for name in fixtures.FIXTURE_NAMES:
        knowledge, truth = fixtures.load_fixture(name)
        backend = simulated_backend(knowledge, truth, seed=4096)
        start = time.perf_counter()
        result = run_pipeline(backend, knowledge, PipelineConfig(seed=4096))
        runs[name] = (result, knowledge, truth, time.perf_counter() - start)
    return runs


@pytest.fixture()
def small_system():
    """Smallest fixture: 4 GiB DDR3, 8 banks, three two-bit functions."""
    name = "ddr3-4g-c1d1r1b8"
    knowledge, truth = fixtures.load_fixture(name)
    backend = simulated_backend(knowledge, truth, seed=4096)
    return name, knowledge, truth, backend
