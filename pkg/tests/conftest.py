import numpy as np
import pytest

from iccnls.core import validate_dataset


@pytest.fixture
def hump():
    # concave 3-point data; the best convex fit is the flat line at 1/3
    return validate_dataset(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 0.0]))


@pytest.fixture
def decreasing():
    return validate_dataset(np.array([[0.0], [1.0], [2.0]]), np.array([2.0, 1.0, 0.0]))
