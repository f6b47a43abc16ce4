import numpy as np
import pytest

from lsm_ml import ExerciseStyle, OptionKind, OptionSpec


@pytest.fixture
def am_put():
    return OptionSpec(OptionKind.PUT, ExerciseStyle.AMERICAN, 100.0, 1.0)


@pytest.fixture
def eu_put():
    return OptionSpec(OptionKind.PUT, ExerciseStyle.EUROPEAN, 100.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
