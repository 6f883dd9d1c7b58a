import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catpose_eval.errors import EmptyInput
from catpose_eval.spatial import NnIndex, build_index, nearest

from conftest import brute_nn


def test_single_point():
    assert nearest(build_index([[0, 0, 0]]), [1, 0, 0]) == (0, 1.0)


def test_self_queries_zero(rng):
    pts = rng.normal(size=(1000, 3))
    _, d = NnIndex(pts).query(pts)
    assert np.all(d == 0)


def test_grid_corner():
    grid = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    i, d = nearest(build_index(grid), [0.1, 0.1, 0.1])
    assert i == 0
    assert d == pytest.approx(math.sqrt(0.03), rel=1e-15)
    assert nearest(build_index(grid), grid[5])[1] == 0.0


def test_duplicates_lowest_index():
    pts = np.array([[1, 1, 1], [0, 0, 0], [0, 0, 0], [0, 0, 0]], dtype=float)
    assert nearest(build_index(pts), [0, 0, 0]) == (1, 0.0)
    # equidistant candidates also resolve to the lowest index
    pts = np.array([[2, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0]], dtype=float)
    assert nearest(build_index(pts), [0, 0, 0]) == (1, 1.0)


def test_empty_rejected():
    with pytest.raises(EmptyInput):
        build_index(np.zeros((0, 3)))


def test_matches_linear_scan(rng):
    pts = rng.uniform(-1, 1, size=(2000, 3))
    q = rng.uniform(-1.2, 1.2, size=(200, 3))
    idx, d = NnIndex(pts).query(q)
    bidx, bd = brute_nn(pts, q)
    np.testing.assert_allclose(d, bd, rtol=1e-12, atol=0)
    assert np.array_equal(idx, bidx)


@given(st.integers(0, 2**32 - 1))
def test_translation_equivariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(300, 3))
    q = rng.normal(size=(20, 3))
    shift = rng.uniform(-10, 10, size=3)
    d0 = NnIndex(pts).distances(q)
    d1 = NnIndex(pts + shift).distances(q + shift)
    np.testing.assert_allclose(d0, d1, atol=1e-9)
