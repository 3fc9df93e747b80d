import numpy as np
import pytest

from sunqsde import ThetaContext, basis_for, tensors_for

ACCEPTANCE_LINES = []


@pytest.fixture(params=[2, 3, 4], ids=lambda n: f"n{n}")
def ctx(request):
    return ThetaContext.for_n(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def su2():
    return basis_for(2), tensors_for(2), ThetaContext.for_n(2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
