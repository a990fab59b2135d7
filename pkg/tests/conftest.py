import numpy as np
import pytest

from fgleak.market_data import MarketPanel

ACCEPTANCE_LINES = []


def make_panel(caps, returns=None, start="2001-01-02", names=None):
    """Panel from a (n, d) cap matrix; returns implied from caps unless given."""
    caps = np.asarray(caps, dtype=float)
    if returns is None:
        returns = np.zeros_like(caps)
        returns[1:] = caps[1:] / caps[:-1] - 1.0
    n, d = caps.shape
    dates = np.datetime64(start) + np.arange(n)
    names = names or tuple(f"N{j}" for j in range(d))
    return MarketPanel(dates, names, caps, returns)


def random_simplex(rng, k, size=None):
    """Interior points of the simplex, bounded away from the faces."""
    shape = (k,) if size is None else (size, k)
    x = rng.uniform(0.05, 1.0, shape)
    return x / x.sum(axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
