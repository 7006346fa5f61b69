import pytest

from qdsampling.qdot import LaserSpec, QDParams
from qdsampling.waveform import make_cmos_pulse

_CRITERIA = []


@pytest.fixture
def qd():
    return QDParams()


@pytest.fixture
def laser():
    return LaserSpec()


@pytest.fixture
def pulse():
    return make_cmos_pulse()


@pytest.fixture
def ideal_qd():
    """No tunnelling, no dephasing: a closed two-level system."""
    return QDParams(gamma_e0=0.0, gamma_h0=0.0, gamma_pure0=0.0)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(number, title, ok, detail):
        _CRITERIA.append((number, title, bool(ok), detail))
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_CRITERIA, key=lambda c: (c[0], c[1])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
