import numpy as np
import pytest

from fragsched import kernels

BACKENDS = ["numpy"] + ([] if kernels.numba_disabled() else ["numba"])

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(params=BACKENDS)
def kernel(request):
    return kernels.get_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str = ""):
        ACCEPTANCE[number] = (passed, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
