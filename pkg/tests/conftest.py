import math

import numpy as np
import pytest

from kmpoly import Dataset, KmpParams, PartitionGrid, MultiIndexSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_params(K=2, p=1, m=2, h=None, mu_tilde=None, xi=None, sigma=0.1,
                kernel="bump"):
    """Feasible KmpParams with sensible defaults (Kh = 1.5, centered mu)."""
    grid = PartitionGrid(K, p)
    if h is None:
        h = 1.5 / K
    mu = grid.block_centers.copy()
    if mu_tilde is not None:
        mu = mu + np.asarray(mu_tilde, dtype=float) / (2.0 * K)
    n_s = len(MultiIndexSet(p, m))
    if xi is None:
        xi = np.zeros((grid.n_blocks, n_s))
    return KmpParams(grid, h, mu, np.asarray(xi, dtype=float), sigma,
                     m=m, kernel=kernel)


def sine_data(n, sigma=0.1, seed=0, freq=1.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 1))
    y = np.sin(2.0 * math.pi * freq * x.ravel()) + sigma * rng.standard_normal(n)
    return Dataset(x, y)
