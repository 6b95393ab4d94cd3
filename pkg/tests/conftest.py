import numpy as np
import pytest

from twisted_triples.circle_kernel import CircleDiffeo, PeriodicFunction
from twisted_triples.crossed_product import DiffeoGroup


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical checks")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def group():
    return DiffeoGroup({"s": CircleDiffeo.sine(0.3), "r": CircleDiffeo.rotation(1 / 3)})


def rand_fn(rng, band=3, decay=True):
    scale = 1.0 / (1.0 + np.arange(band + 1)) if decay else np.ones(band + 1)
    return PeriodicFunction.from_triples(
        [(k, *(rng.normal(size=2) * scale[abs(k)])) for k in range(-band, band + 1)])


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
