import numpy as np
import pytest

from advgame import DistributionSpec, GameConfig, GaussianComponent, two_gaussians_1d


@pytest.fixture
def spec_1d():
    """Symmetric 1-D Gaussians N(-1,1) / N(+1,1), equal priors."""
    return two_gaussians_1d()


@pytest.fixture
def spec_1d_mix():
    """Two-component mixture vs a single Gaussian, skewed prior."""
    return DistributionSpec(
        prior_pos=0.4,
        dimension=1,
        components_pos=(
            GaussianComponent(0.5, (-2.0,), (1.0,)),
            GaussianComponent(0.5, (2.0,), (1.0,)),
        ),
        components_neg=(GaussianComponent(1.0, (0.0,), (0.7,)),),
    )


@pytest.fixture
def spec_2d():
    return DistributionSpec(
        prior_pos=0.5,
        dimension=2,
        components_pos=(GaussianComponent(1.0, (0.6, 0.6), (0.01, 0.01)),),
        components_neg=(GaussianComponent(1.0, (0.4, 0.4), (0.01, 0.01)),),
    )


@pytest.fixture
def cfg_mass():
    return GameConfig("mass", 0.3, 0.5)


@pytest.fixture
def cfg_norm():
    return GameConfig("norm", 0.3, 0.5)
