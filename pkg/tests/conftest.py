import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance():
    """Record one acceptance line: ``acceptance(label, passed, detail)``."""

    def record(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
    from lightcone._accel import USE_NUMBA

    terminalreporter.write_line(f"(kernels: {'numba' if USE_NUMBA else 'numpy'})")
