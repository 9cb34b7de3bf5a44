import numpy as np
import pytest

from oneside_levy.grunwald import compute_coeffs
from oneside_levy.symbol import LaplaceExponent, LevyMeasureSpec


@pytest.fixture(scope="session")
def stable_exp():
    return LaplaceExponent(LevyMeasureSpec.stable(1.5))


@pytest.fixture(scope="session")
def coeffs_h1(stable_exp):
    return compute_coeffs(stable_exp, 1.0, 128)


@pytest.fixture(scope="session")
def coeffs_n9(stable_exp):
    # mesh for 9 interior points, weights deep enough for simulation tables
    return compute_coeffs(stable_exp, 0.2, 2048)


def binom(b: float, m: int) -> float:
    """Generalised binomial coefficient by plain product (test oracle)."""
    out = 1.0
    for i in range(1, m + 1):
        out *= (b - i + 1.0) / i
    return out


@pytest.fixture(scope="session")
def binom_oracle():
    return binom


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987654321)
