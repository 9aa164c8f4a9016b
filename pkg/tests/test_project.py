import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stgmrf.fem import TriMesh2D, structured_mesh
from stgmrf.project import FieldGrid, projector, read_grid_csv


def test_constant_one_inside_hull():
    m = structured_mesh((-3, 7), (0, 5), 11, 6)
    p = projector(m, (200, 200))
    grid = p.project(np.ones(m.n))
    assert grid.shape == (200, 200)
    assert np.all(np.isfinite(grid))
    assert np.max(np.abs(grid - 1)) < 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.integers(3, 9))
def test_linear_fields_exact(a, b, c, k):
    m = structured_mesh((0, 2), (-1, 1), k, k + 1)
    f = a + b * m.vertices[:, 0] + c * m.vertices[:, 1]
    p = projector(m, (17, 13))
    X, Y = np.meshgrid(p.x, p.y)
    np.testing.assert_allclose(p.project(f), a + b * X + c * Y, atol=1e-11)


def test_outside_is_nan():
    m = TriMesh2D([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    p = projector(m, (11, 11))
    g = p.project(np.ones(3))
    X, Y = np.meshgrid(p.x, p.y)
    outside = X + Y > 1 + 1e-9
    assert np.all(np.isnan(g[outside]))
    assert np.all(g[~outside] == pytest.approx(1.0, abs=1e-12))


def test_window_beyond_mesh():
    m = structured_mesh((0, 1), (0, 1), 3, 3)
    g = projector(m, (5, 5), window=(-1, 2, -1, 2)).project(np.ones(m.n))
    assert np.isnan(g[0, 0]) and g[2, 2] == pytest.approx(1.0)


def test_dims_validated():
    with pytest.raises(ValueError):
        projector(structured_mesh((0, 1), (0, 1), 2, 2), (1, 5))


def test_csv_round_trip(tmp_path):
    values = np.array([[1.0, np.nan], [0.1, -2e-7]])
    FieldGrid(1, values).write_csv(tmp_path / "g.csv")
    np.testing.assert_array_equal(read_grid_csv(tmp_path / "g.csv"), values)
