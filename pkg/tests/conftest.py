import numpy as np
import pytest

from gampcs import SeedingProfile, SignalModel


@pytest.fixture(scope="session")
def demo_model():
    """The workhorse model: a fifth of the components are unit Gaussians,
    the rest nearly zero."""
    return SignalModel(rho=0.2, eps=1e-6, sigma2=1.0)


@pytest.fixture(scope="session")
def blue_profile():
    """Seeded design that reconstructs at rate 0.303: oversampled first
    block, three backward couplings, weak forward coupling."""
    return SeedingProfile(Lc=30, Lr=31, alpha_seed=0.4, alpha_bulk=0.29,
                          J=0.2, W=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
