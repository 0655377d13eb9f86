import warnings

import numpy as np
import pytest

from whmc.factorization import factor_laws
from whmc.models import (
    BetaFamilyParams,
    BetaSubordinatorParams,
    HypergeometricParams,
    LevyModel,
)
from whmc.presets import parameter_set


@pytest.fixture(scope="session")
def set1():
    return parameter_set(1)


@pytest.fixture(scope="session")
def set2():
    return parameter_set(2)


@pytest.fixture(scope="session")
def hyp_model():
    sub1 = BetaSubordinatorParams(c=1.0, alpha=0.7, beta=1.2, gamma=0.4, delta=0.3, kappa=0.0)
    sub2 = BetaSubordinatorParams(c=0.8, alpha=0.5, beta=1.2, gamma=0.3, delta=0.2, kappa=0.1)
    return LevyModel("Hypergeometric", HypergeometricParams(d=0.1, sigma=0.25, sub1=sub1, sub2=sub2))


@pytest.fixture(scope="session")
def pair1_100(set1):
    return factor_laws(set1, 100.0, 128)


@pytest.fixture(scope="session")
def pair2_100(set2):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return factor_laws(set2, 100.0, 128)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240817))
