import numpy as np
import pytest

from semforecast.evaluate.synthetic import generate_synthetic_economy
from semforecast.lexicon import bind

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def economy():
    eco = generate_synthetic_economy(7, 160)
    return eco, bind(eco.lexicon, eco.matrix.vocabulary)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
