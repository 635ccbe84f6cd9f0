import pytest

from disttest.streams import make_rng


@pytest.fixture
def rng():
    return make_rng(20240611)
