import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jamguard.datagen import generate_detection_dataset, generate_localization_dataset
from jamguard.optics import build_reference_chain

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def chain():
    return build_reference_chain()


@pytest.fixture(scope="session")
def det_50():
    return generate_detection_dataset("50_50", 1140, "power_only", seed=0)


@pytest.fixture(scope="session")
def det_90():
    return generate_detection_dataset("90_10", 1140, "power_only", seed=0)


@pytest.fixture(scope="session")
def loc_ds():
    return generate_localization_dataset(46, "power_only", seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
