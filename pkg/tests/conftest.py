import pytest

from quantcons.digraph import assign_priorities
from quantcons.experiments import EXAMPLE_PRIORITIES, REMARK_PRIORITIES, example_graph

_acceptance: list[tuple[str, str]] = []


@pytest.fixture
def example():
    g = example_graph()
    return g, assign_priorities(g, override=EXAMPLE_PRIORITIES)


@pytest.fixture
def remark():
    g = example_graph()
    return g, assign_priorities(g, override=REMARK_PRIORITIES)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
