"""Shared fixtures and dense oracles."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stgmrf.sparse import from_dense

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_spd(n: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """Sparse symmetric, strictly diagonally dominant matrix (dense storage)."""
    a = np.zeros((n, n))
    mask = np.tril(rng.random((n, n)) < density, -1)
    a[mask] = rng.uniform(-1.0, 1.0, mask.sum())
    a = a + a.T
    a[np.diag_indices(n)] = np.abs(a).sum(axis=1) + rng.uniform(0.1, 2.0, n)
    return a


def random_spd_sparse(n, density, seed):
    rng = np.random.default_rng(seed)
    return from_dense(random_spd(n, density, rng))


def grid_laplacian(k: int, shift: float) -> np.ndarray:
    """5-point Laplacian on a k x k grid plus ``shift * I`` (dense)."""
    n = k * k
    a = np.zeros((n, n))
    for i in range(k):
        for j in range(k):
            v = i * k + j
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < k and 0 <= jj < k:
                    a[v, ii * k + jj] = -1.0
                    a[v, v] += 1.0
    return a + shift * np.eye(n)


def dense_cholesky_fill(a: np.ndarray) -> np.ndarray:
    """Boolean structure of L by symbolic elimination on the dense graph."""
    n = a.shape[0]
    s = a != 0
    for k in range(n):
        nb = np.flatnonzero(s[k + 1:, k]) + k + 1
        s[np.ix_(nb, nb)] = True
    return np.tril(s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
