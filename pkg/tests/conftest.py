import numpy as np
import pytest

from qsqg import GridSpec, SpaceParams, band_limited_corpus, field_from_function

L = 2 * np.pi


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16, L)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32, L)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64, L)


@pytest.fixture(scope="session")
def params():
    return SpaceParams(0.25, 0.75)


@pytest.fixture(scope="session")
def smooth32(grid32):
    # a few incommensurate low modes, mean zero
    return field_from_function(
        grid32,
        lambda x1, x2: np.sin(x1) * np.cos(2 * x2) + 0.5 * np.cos(3 * x1 + x2),
    )


@pytest.fixture(scope="session")
def corpus32(grid32):
    return band_limited_corpus(grid32, count=6, max_mode=4, seed=7113)
