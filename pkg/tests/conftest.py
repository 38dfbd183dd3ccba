import numpy as np
import pytest

from catmap.dynamics import MapParams

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20021)


@pytest.fixture
def cat_params():
    """K=0.04, a=1.6 at n_q=6, where the packet tunnels with a period of about 90."""
    return MapParams(0.04, 1.6, 6)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
