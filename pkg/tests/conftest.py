import time

import pytest

from hespin.device import DeviceParams
from hespin.experiments import run_fig3, run_fig4

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def device():
    return DeviceParams()


@pytest.fixture(scope="session")
def fig3_run(device):
    start = time.perf_counter()
    table = run_fig3(device)
    return table, time.perf_counter() - start


@pytest.fixture(scope="session")
def fig4_run(device):
    start = time.perf_counter()
    table = run_fig4(device)
    return table, time.perf_counter() - start


@pytest.fixture
def record_acceptance():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
