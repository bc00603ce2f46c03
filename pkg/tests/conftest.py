import numpy as np
import pytest

from roughlab.paths import Dissection, PiecewisePath, chen_signature
from roughlab.tensor import GroupElement, TensorShape, TruncatedTensor


def random_piecewise_path(rng, d, n_segments=5, scale=1.0, T=1.0):
    times = np.sort(rng.uniform(0.0, T, n_segments - 1))
    times = np.concatenate(([0.0], times, [T]))
    while np.any(np.diff(times) <= 1e-9):
        times = np.sort(rng.uniform(0.0, T, n_segments - 1))
        times = np.concatenate(([0.0], times, [T]))
    values = rng.normal(0.0, scale, (n_segments + 1, d))
    return PiecewisePath(times, values)


def random_group_element(rng, shape, n_segments=4, scale=1.0):
    """Exactly group-like element: the Chen signature of a random path."""
    path = random_piecewise_path(rng, shape.d, n_segments, scale)
    return chen_signature(path, 0.0, 1.0, shape.N)


def random_tensor(rng, shape, scale=1.0):
    levels = [np.array(rng.normal(0.0, scale))]
    for k in range(1, shape.N + 1):
        levels.append(rng.normal(0.0, scale, shape.level_shape(k)))
    return TruncatedTensor(shape, levels)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
