"""Shared fixtures and dense reference oracles.

The oracles here deliberately avoid the package's own kernels: hierarchical
factors are built as explicit dense matrices with numpy solves, so a test
comparing kernel output against them exercises two independent routes.
"""

import numpy as np
import pytest

from hssorkit.problems import GridSpec, build_matrix
from hssorkit.sparse import split_offsets


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def dense_hierarchical_factor(split):
    """B = (P + L3)(I + P^-1 L3^T), P = (T + L2)(I + T^-1 L2^T), T likewise."""
    nx, ny, nz = split.dims
    n = nx * ny * nz
    m = np.diag(split.diag)
    l1 = np.zeros((n, n))
    l2 = np.zeros((n, n))
    l3 = np.zeros((n, n))
    for i in range(n):
        if i % nx:
            l1[i, i - 1] = split.l1[i]
        if (i // nx) % ny:
            l2[i, i - nx] = split.l2[i]
        if i // (nx * ny):
            l3[i, i - nx * ny] = split.l3[i]
    t = (m + l1) @ (np.eye(n) + np.linalg.solve(m, l1.T))
    p = (t + l2) @ (np.eye(n) + np.linalg.solve(t, l2.T))
    return (p + l3) @ (np.eye(n) + np.linalg.solve(p, l3.T))


def dense_ssor_factor(a_dense):
    """(D + L) D^-1 (D + U) for a dense symmetric matrix."""
    d = np.diag(np.diag(a_dense))
    low = np.tril(a_dense, -1)
    up = np.triu(a_dense, 1)
    return (d + low) @ np.linalg.solve(d, d + up)


@pytest.fixture
def iso3d_small():
    spec = GridSpec(dim=3, n=4)
    return spec, build_matrix(spec)


@pytest.fixture
def iso2d_small():
    spec = GridSpec(dim=2, n=5)
    return spec, build_matrix(spec)


def hierarchical_oracle(matrix):
    return dense_hierarchical_factor(split_offsets(matrix))
