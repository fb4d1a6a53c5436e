import pytest

from erodewave.model import make_model


@pytest.fixture(scope="session")
def quad():
    """g(z) = 1 - z^2, h(z) = 1 + z, h(0) = 1, h(1) = 2."""
    return make_model("quadratic")


@pytest.fixture(scope="session")
def ex5():
    """g(z) = (1 - z)(1/2 + z), h(z) = 1/2 + z."""
    return make_model("example5")


@pytest.fixture(scope="session")
def degenerate_h0():
    """g(z) = z(1 - z): h(z) = z with h(0) = 0 (bounded-slope regime)."""
    return make_model([0.0, 1.0, -1.0])
