import numpy as np
import pytest

from narxnas.config import table_defaults
from narxnas.plant import Dataset, bundled_dataset

# (criterion number, passed, detail) appended by the acceptance suite
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def learning():
    return bundled_dataset("learning")


@pytest.fixture(scope="session")
def short_learning(learning):
    # first 600 samples: same dynamics, quicker searches
    return Dataset(learning.inputs[:600], learning.targets[:600], learning.nominal_input,
                   learning.nominal_output, learning.sample_period, "learning600")


@pytest.fixture
def small_config():
    def make(algorithm="dnas3", **kw):
        base = dict(popSize=10, generations=4, maxNinLay=5, duMax=6, dyMax=6, du=2, dy=2,
                    hmBest=3, calls=2, maxEpochs=20)
        base.update(kw)
        return table_defaults(algorithm).replace(**base)
    return make


def linear_dataset(n=400, seed=0, a=0.6, b=0.3, c=0.1):
    """ARX data from y(k) = a*y(k-1) + b*u(k) + c, nominal (0, c/(1-a) + ...)."""
    rng = np.random.default_rng(seed)
    u = np.repeat(rng.uniform(-1, 1, n // 10), 10)
    y = np.empty(n)
    prev = 0.0
    for k in range(n):
        prev = a * prev + b * u[k] + c
        y[k] = prev
    return Dataset(u, y, 0.0, 1.0, 1.0, "linear")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
