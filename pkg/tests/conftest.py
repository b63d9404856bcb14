import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("weakflow", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("weakflow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
