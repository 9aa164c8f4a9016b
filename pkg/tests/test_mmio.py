import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stgmrf import mmio
from stgmrf.errors import MatrixMarketError
from stgmrf.sparse import ProjectionMatrix, from_dense

from conftest import random_spd


@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**31))
def test_symmetric_round_trip_exact(tmp_path_factory, n, density, seed):
    path = tmp_path_factory.mktemp("mm") / "q.mtx"
    a = from_dense(random_spd(n, density, np.random.default_rng(seed)))
    mmio.write_symmetric(path, a)
    b = mmio.read_symmetric(path)
    assert b.pattern == a.pattern
    np.testing.assert_array_equal(b.values, a.values)
    first = path.read_bytes()
    mmio.write_symmetric(path, b)
    assert path.read_bytes() == first


def test_header_and_one_based(tmp_path):
    path = tmp_path / "d.mtx"
    mmio.write_symmetric(path, from_dense(np.diag([2.0, 4.0])))
    assert path.read_text() == "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2.0\n2 2 4.0\n"


def test_general_file_read_as_symmetric(tmp_path):
    path = tmp_path / "g.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 4\n2 1 2\n1 2 2\n2 2 3\n")
    np.testing.assert_array_equal(mmio.read_symmetric(path).to_dense(), [[4, 2], [2, 3]])


def test_general_asymmetric_rejected(tmp_path):
    path = tmp_path / "g.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 4\n2 1 2\n2 2 3\n")
    with pytest.raises(MatrixMarketError):
        mmio.read_symmetric(path)


@pytest.mark.parametrize(
    "text",
    [
        "garbage\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n1 1 2\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 abc\n",
        "%%MatrixMarket matrix array real general\n1 1\n1\n",
    ],
)
def test_malformed(tmp_path, text):
    path = tmp_path / "bad.mtx"
    path.write_text(text)
    with pytest.raises(MatrixMarketError):
        mmio.read_symmetric(path)


def test_missing_file(tmp_path):
    with pytest.raises(MatrixMarketError):
        mmio.read_symmetric(tmp_path / "nope.mtx")


def test_projection_round_trip(tmp_path):
    a = ProjectionMatrix.from_triplets([0, 1, 1], [2, 0, 3], [1.5, -2.0, 0.25], (2, 4))
    path = tmp_path / "a.mtx"
    mmio.write_projection(path, a)
    np.testing.assert_array_equal(mmio.read_general(path).to_dense(), a.to_dense())


def test_vector_round_trip_with_nan(tmp_path):
    x = np.array([[1.0, np.nan], [1e-300, -3.5]])
    path = tmp_path / "v.txt"
    mmio.write_vector(path, x)
    np.testing.assert_array_equal(mmio.read_vector(path), x)
    mmio.write_vector(path, x[:, 0])
    assert mmio.read_vector(path).shape == (2,)


def test_vector_ragged(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("1 2\n3\n")
    with pytest.raises(MatrixMarketError):
        mmio.read_vector(path)
