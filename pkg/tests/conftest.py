import numpy as np
import pytest

from curvgrf import _backend
from curvgrf.corrmodel import CorrelationModel, constants


@pytest.fixture
def gaussian():
    return CorrelationModel("gaussian", lengthscale=1.0, variance=1.0)


@pytest.fixture
def consts(gaussian):
    return constants(gaussian)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


BACKENDS = ["numpy"] + (["numba"] if _backend.NUMBA_AVAILABLE else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


# verdict lines from test_acceptance.py, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
