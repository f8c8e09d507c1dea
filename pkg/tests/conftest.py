import numpy as np
import pytest

from eibnb.gp import DesignData, fit_mle
from eibnb.sampling import maximin_lhd
from eibnb.testbed import branin_function


@pytest.fixture(scope="session")
def branin():
    return branin_function()


@pytest.fixture(scope="session")
def branin_fit_10(branin):
    """Fixed 10-point Branin fit shared by the optimizer tests."""
    rng = np.random.default_rng(42)
    X = maximin_lhd(10, 2, 100, rng)
    y = branin(X)
    return fit_mle(DesignData(X, y), rng=rng)
