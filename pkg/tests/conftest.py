import numpy as np
import pytest

from uwsnsim.models import ModelSpec, RateParams, Variant


@pytest.fixture
def basic_spec():
    return ModelSpec(Variant.SIR_BASIC, RateParams(b=0.4, c=0.15))


@pytest.fixture
def vital_spec():
    # The endemic parameter set: R0 = 84.692...
    return ModelSpec(Variant.SIR_VITAL, RateParams(b=0.33, c=0.035, m=0.0018, l=0.017))


def random_valid_state(rng: np.random.Generator, six: bool = False):
    """A random point of the (closed) unit simplex, optionally with sleeping
    compartments."""
    parts = rng.dirichlet(np.ones(6 if six else 3))
    if six:
        return parts
    return np.concatenate([parts, np.zeros(3)])
