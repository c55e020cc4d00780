import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import netbath as nb

settings.register_profile(
    "ci", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def narrow_band():
    """Narrow relative bandwidth: a^2/omega^2 ~ 0.1."""
    return nb.derive_params(5, 10.0, 1.0, 0.5)


@pytest.fixture(scope="session")
def wide_band():
    """Wide relative bandwidth: a^2/omega^2 ~ 0.6."""
    return nb.derive_params(20, 0.1, 20.0, 0.5)


@pytest.fixture(scope="session")
def ordered_chain():
    """Line network comfortably inside the ordered phase."""
    return nb.derive_params(2, 1.0, 0.5, 1.0)


@pytest.fixture(scope="session")
def lambda_grid():
    return np.logspace(-1, 2, 60)
