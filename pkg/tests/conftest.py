import pytest

from delta2d.calibration import fixture_pair
from delta2d.kernels import default_profile

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def record(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def toy3():
    return fixture_pair("toy3")


@pytest.fixture(scope="session")
def diag3():
    return fixture_pair("diag3")


@pytest.fixture(scope="session")
def diag4():
    return fixture_pair("diag4")


@pytest.fixture(scope="session")
def pair4():
    return fixture_pair("pair4")


@pytest.fixture(scope="session")
def diag5():
    return fixture_pair("diag5")


@pytest.fixture(scope="session")
def ex10():
    return fixture_pair("ex10")
