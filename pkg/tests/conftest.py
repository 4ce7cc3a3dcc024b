import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roscal.bench import generate_portfolio
from roscal.solve import SolverConfig
from roscal.toy import _axis_map_problem


@pytest.fixture(scope="session")
def portfolio2():
    return generate_portfolio(2)


@pytest.fixture(scope="session")
def portfolio3():
    return generate_portfolio(3)


@pytest.fixture(scope="session")
def portfolio20():
    return generate_portfolio(20)


@pytest.fixture(scope="session")
def toy_problem():
    return _axis_map_problem()


@pytest.fixture()
def fast_cfg():
    return SolverConfig(max_iters=400)


@pytest.fixture()
def barrier_cfg():
    return SolverConfig(method="barrier", tol=1e-10)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
