import pytest

from pvarea.model import Deterministic, Exponential, NetworkModel

# (number, name, passed, detail) lines recorded by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def report():
    def _report(number, name, passed, detail=""):
        ACCEPTANCE.append((number, name, bool(passed), detail))

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE, key=lambda r: (r[0], r[1])):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {name} {detail}".rstrip())


@pytest.fixture
def marpa():
    return NetworkModel.single_tier(1.0, Deterministic(1.0), 4.0)


@pytest.fixture
def mirpa2():
    return NetworkModel.single_tier(1.0, Exponential(1.0, 1.0), 2.0)
