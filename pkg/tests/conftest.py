import numpy as np
import pytest

from spacings import DEFAULT_PARAMS, DistributionSpec


@pytest.fixture(scope="session")
def default_specs() -> dict[str, DistributionSpec]:
    """One spec per family, at the documented default parameters."""
    return {fam: DistributionSpec(fam) for fam in DEFAULT_PARAMS}


# Alternative parameter sets exercising non-unit scales and shifted
# locations; kept exactly representable in binary where it matters.
ALT_PARAMS = {
    "uniform": {"a": -1.5, "b": 2.5},
    "exponential": {"lambda": 2.5},
    "logistic": {"mu": 1.0, "sigma": 0.5},
    "gumbel": {"mu": -2.0, "sigma": 1.5},
    "laplace": {"mu": 0.25, "sigma": 2.0},
    "cauchy": {"mu": -1.0, "sigma": 0.5},
    "pareto": {"a": 2.5, "b": 3.0},
    "rayleigh": {"sigma": 0.5},
    "weibull": {"a": 0.75, "b": 2.0},
    "frechet": {"lambda": 2.0, "mu": 1.0, "sigma": 0.5},
}


@pytest.fixture(scope="session")
def alt_specs() -> dict[str, DistributionSpec]:
    return {fam: DistributionSpec(fam, p) for fam, p in ALT_PARAMS.items()}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(20240817))
