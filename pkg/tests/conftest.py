from fractions import Fraction

import pytest

from carcheck import io
from carcheck.core import StateSpace

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, elapsed, bound in sorted(ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({elapsed:.2f} s, bound {bound} s)")


def F(text):
    return Fraction(text)


@pytest.fixture
def abc():
    return StateSpace(("A", "B", "C"))


@pytest.fixture
def bundled():
    return io.load_model


@pytest.fixture
def monty16():
    return io.load_model("monty_2_16")


@pytest.fixture
def monty17():
    return io.load_model("monty_2_17")


@pytest.fixture
def tests22():
    return io.load_model("tests_2_2")
