import pytest

from rsavg.averages import Context


@pytest.fixture(scope="session")
def ctx():
    return Context(-7, "11a1", 3)


@pytest.fixture(scope="session")
def ctx17():
    return Context(-7, "17a1", 3)
