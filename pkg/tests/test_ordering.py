import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stgmrf.factor import analyze
from stgmrf.ordering import Permutation, dense_threshold, order
from stgmrf.sparse import from_dense, from_triplets, identity

from conftest import dense_cholesky_fill, grid_laplacian, random_spd


def fill_count(q, scheme):
    return analyze(q, order(q, scheme)).nnz_l


def bandwidth(d):
    r, c = np.nonzero(d)
    return int(np.max(np.abs(r - c))) if r.size else 0


@given(st.integers(1, 40), st.floats(0, 0.5), st.integers(0, 2**31), st.sampled_from(["amd", "rcm", "identity"]))
def test_valid_permutation(n, density, seed, scheme):
    q = from_dense(random_spd(n, density, np.random.default_rng(seed)))
    p = order(q, scheme)
    assert sorted(p.perm.tolist()) == list(range(n))
    np.testing.assert_array_equal(p.perm[p.inverse], np.arange(n))


@given(st.integers(2, 30), st.floats(0, 0.5), st.integers(0, 2**31), st.sampled_from(["amd", "rcm"]))
def test_deterministic(n, density, seed, scheme):
    q = from_dense(random_spd(n, density, np.random.default_rng(seed)))
    np.testing.assert_array_equal(order(q, scheme).perm, order(q, scheme).perm)


def test_identity_scheme():
    q = from_dense(grid_laplacian(4, 0.1))
    assert order(q, "identity").is_identity()


def test_diagonal_amd_no_fill():
    q = identity(7)
    assert fill_count(q, "amd") == 7


def test_amd_beats_identity_on_grid():
    q = from_dense(grid_laplacian(5, 0.1))
    assert fill_count(q, "amd") <= fill_count(q, "identity")


def test_amd_fill_on_tridiagonal_is_minimal():
    d = np.diag(np.full(10, 3.0)) - np.eye(10, k=1) - np.eye(10, k=-1)
    assert fill_count(from_dense(d), "amd") == 19


def test_amd_reduces_fill_on_larger_grid():
    q = from_dense(grid_laplacian(12, 0.1))
    assert fill_count(q, "amd") < 0.6 * fill_count(q, "identity")


def test_rcm_shrinks_bandwidth_of_shuffled_band():
    rng = np.random.default_rng(3)
    n = 60
    d = np.diag(np.full(n, 5.0)) - np.eye(n, k=1) - np.eye(n, k=-1) - np.eye(n, k=2) - np.eye(n, k=-2)
    shuffle = rng.permutation(n)
    ds = d[np.ix_(shuffle, shuffle)]
    p = order(from_dense(ds), "rcm")
    assert bandwidth(ds[np.ix_(p.perm, p.perm)]) == 2


def test_dense_rows_ordered_last():
    n = 300
    rows = list(range(1, n - 2)) + list(range(n - 2))
    cols = list(range(n - 3)) + [n - 1] * (n - 2)
    q = from_triplets(n, rows, cols, np.full(len(rows), -0.1))
    assert n - 1 > dense_threshold(n)
    for scheme in ("amd", "rcm"):
        assert order(q, scheme).perm[-1] == n - 1


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])
    with pytest.raises(ValueError):
        Permutation([0, 3])


def test_unknown_scheme():
    with pytest.raises(ValueError):
        order(identity(2), "metis")


def test_fill_matches_dense_symbolic_oracle():
    d = grid_laplacian(4, 0.1)
    q = from_dense(d)
    assert analyze(q, order(q, "identity")).nnz_l == int(dense_cholesky_fill(d).sum())
