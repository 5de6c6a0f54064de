import math

import numpy as np
import pytest

from weakprobe.detector import build_bins, calibrate
from weakprobe.qmat import QubitParams

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_bins(g=5.0, beta=math.pi / 4, delta_t=0.01, E=1.0, sigma=1.0, bin_width=None):
    qp = QubitParams(E, beta)
    dp = calibrate(g, E, delta_t, sigma, bin_width=bin_width)
    return qp, dp, build_bins(dp, qp)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return request.param
