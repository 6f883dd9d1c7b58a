import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.distance import pdist
from scipy.stats import chisquare

from catpose_eval.errors import DegenerateMesh, TooFewPoints, ValidationError
from catpose_eval.geometry import transform_points
from catpose_eval.sampling import TriMesh, derive_seed, diameter, sample_surface

from conftest import cube_mesh, random_pose, sphere_points


def test_points_inside_right_triangle():
    mesh = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    pts = sample_surface(mesh, 3, seed=42)
    assert pts.shape == (3, 3)
    assert np.all(pts[:, 2] == 0)
    assert np.all(pts[:, :2] >= 0) and np.all(pts[:, 0] + pts[:, 1] <= 1 + 1e-12)


def test_points_on_their_triangles(rng):
    mesh = TriMesh(rng.normal(size=(6, 3)), [[0, 1, 2], [3, 4, 5]])
    pts = sample_surface(mesh, 500, seed=3)
    # every point lies on the plane of one of the two triangles
    off = []
    for tri in mesh.triangles:
        a, b, c = mesh.vertices[tri]
        n = np.cross(b - a, c - a)
        n /= np.linalg.norm(n)
        off.append(np.abs((pts - a) @ n))
    assert np.all(np.min(off, axis=0) <= 1e-7)


def test_deterministic():
    mesh = cube_mesh()
    a = sample_surface(mesh, 1000, seed=7)
    b = sample_surface(mesh, 1000, seed=7)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_surface(mesh, 1000, seed=8))


def test_cube_face_fractions():
    pts = sample_surface(cube_mesh(), 10_000, seed=0)
    counts = []
    for axis in range(3):
        for sign in (-0.5, 0.5):
            counts.append(np.sum(np.abs(pts[:, axis] - sign) < 1e-12))
    frac = np.array(counts) / 10_000
    assert frac.sum() == pytest.approx(1.0)
    assert np.all(np.abs(frac - 1 / 6) <= 0.02)


def test_area_weighting_chi_square():
    # two disjoint triangles with area ratio 1:9
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 0, 0], [8, 0, 0], [5, 3, 0]]
    mesh = TriMesh(v, [[0, 1, 2], [3, 4, 5]])
    pts = sample_surface(mesh, 10_000, seed=11)
    small = int(np.sum(pts[:, 0] < 2.5))
    _, p = chisquare([small, 10_000 - small], [1_000, 9_000])
    assert p > 0.001


def test_degenerate_mesh():
    mesh = TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(DegenerateMesh):
        sample_surface(mesh, 10)
    with pytest.raises(DegenerateMesh):
        sample_surface(TriMesh.empty(), 10)


def test_mesh_validation():
    with pytest.raises(ValidationError):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])
    with pytest.raises(ValidationError):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])
    with pytest.raises(ValidationError):
        TriMesh([[0, 0, np.nan], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def test_derive_seed_stable():
    assert derive_seed(0, "a") == derive_seed(0, "a")
    assert derive_seed(0, "a") != derive_seed(0, "b")
    assert derive_seed(5, "a") == derive_seed(0, "a") ^ 5
    assert 0 <= derive_seed(2**64 - 1, "x") < 2**64


def test_diameter_examples():
    assert diameter([[0, 0, 0], [0, 0, 1]]) == 1.0
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    assert diameter(corners) == pytest.approx(math.sqrt(3), rel=1e-15)
    with pytest.raises(TooFewPoints):
        diameter([[0, 0, 0]])


def test_diameter_sphere_samples():
    pts = sphere_points(1000, 0.05, seed=2)
    d = diameter(pts)
    assert d == pdist(pts).max()
    assert 0.099 <= d <= 0.1


def test_diameter_equals_brute_force_exactly(rng):
    for _ in range(5):
        pts = rng.normal(size=(500, 3))
        assert diameter(pts) == pdist(pts).max()


def test_diameter_coplanar_fallback(rng):
    pts = np.c_[rng.normal(size=(200, 2)), np.zeros(200)]
    assert diameter(pts) == pdist(pts).max()


@given(st.integers(0, 2**32 - 1))
def test_diameter_rigid_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(100, 3))
    t = random_pose(rng)
    assert abs(diameter(transform_points(t, pts)) - diameter(pts)) <= 1e-9
