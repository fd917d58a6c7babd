import numpy as np
import pytest

import mgnash as mg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_random_game():
    """A seeded 3-state game plus its generated initial policies."""
    return mg.random_instance(mg.GenSpec(3, 3, 3, 0.9, 42))
