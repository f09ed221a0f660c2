import numpy as np
import pytest

from semival.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def regression_pair(n=8, n_test=6, d=2, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n + n_test, d))
    y = X @ np.arange(1, d + 1) + 0.3 * r.normal(size=n + n_test)
    return Dataset(X[:n], y[:n]), Dataset(X[n:], y[n:])


def classification_pair(n=8, n_test=10, d=2, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n + n_test, d))
    y = (X[:, 0] + 0.5 * r.normal(size=n + n_test) > 0).astype(float)
    # both classes present on each side
    y[:2] = [0.0, 1.0]
    y[n:n + 2] = [0.0, 1.0]
    return (Dataset(X[:n], y[:n], task="classification"),
            Dataset(X[n:], y[n:], task="classification"))


@pytest.fixture
def reg_data():
    return regression_pair()


@pytest.fixture
def cls_data():
    return classification_pair()
