import pytest

from kmpp_lowerbound import InstanceParams, build_instance

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def k2():
    return build_instance(InstanceParams(2, 1.0, 1.0, 5.0))


@pytest.fixture
def k3():
    return build_instance(InstanceParams(3, 1.0, 1.0, 32.0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
