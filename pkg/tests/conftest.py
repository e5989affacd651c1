import numpy as np
import pytest

from ddmor import systems


@pytest.fixture
def first_order():
    """G(s) = 1/(s + 1)."""
    return systems.StateSpace(None, [[-1.0]], [[1.0]], [[1.0]])


@pytest.fixture
def first_order_dt():
    """G(z) = 1/(z - 0.5)."""
    return systems.StateSpace(None, [[0.5]], [[1.0]], [[1.0]], systems.DISCRETE)


@pytest.fixture
def illustrative():
    return systems.generate_benchmark("illustrative")


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
