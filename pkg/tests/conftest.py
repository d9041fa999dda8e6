import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from designbench.assignment import confounded_mechanism, deterministic_from, outcome_proportional_for  # noqa: E402
from designbench.population import make_paper_population, make_proportional_population  # noqa: E402


@pytest.fixture
def paper():
    return make_paper_population()


@pytest.fixture
def proportional():
    return make_proportional_population()


@pytest.fixture
def s3(paper):
    return confounded_mechanism(paper)


@pytest.fixture
def w_equals_u(paper):
    return deterministic_from(paper, lambda y1, y0, x, u: u)


@pytest.fixture
def threshold(paper):
    return deterministic_from(paper, lambda y1, y0, x, u: int(y1 == 1))


@pytest.fixture
def prop_mech(proportional):
    return outcome_proportional_for(proportional)


@pytest.fixture
def rng():
    return np.random.default_rng(20211)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.VERDICTS:
        terminalreporter.write_line(line)
