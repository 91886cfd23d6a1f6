import numpy as np
import pytest

from krein_canon.core_linalg import reversal


def D(k):
    return reversal(k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sorted_eigs(a):
    ev = np.linalg.eigvals(a)
    return ev[np.lexsort((ev.imag, ev.real))]


_ACCEPTANCE = []


@pytest.fixture
def acceptance_line():
    """Record a one-line verdict shown in the terminal summary."""

    def record(name, passed, detail=""):
        line = f"{name}: {'PASS' if passed else 'FAIL'}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
