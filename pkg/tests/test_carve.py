import numpy as np
import pytest

from catpose_eval import carve
from catpose_eval.carve import AnnotatedFrame, VoxelGrid, laplacian_smooth, marching_cubes, tight_box
from catpose_eval.datasets.fixtures import box_mesh, icosahedron_directions, mesh_frames, sphere_frames
from catpose_eval.errors import EmptyFrames, EmptyMesh, ResolutionTooCoarse
from catpose_eval.geometry import RigidTransform
from catpose_eval.metrics import f_score
from catpose_eval.sampling import TriMesh, sample_surface

from conftest import sphere_points

RES = 0.002


@pytest.fixture(scope="module")
def frames():
    return sphere_frames(0.05)


def _edges(mesh):
    f = mesh.triangles
    return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])


def test_carve_errors(frames):
    with pytest.raises(EmptyFrames):
        carve.carve([0.1] * 3, RES, [])
    with pytest.raises(ResolutionTooCoarse):
        carve.carve([0.1] * 3, 0.2, frames)


def test_carve_monotone_in_frames(frames):
    prev = carve.carve([0.12] * 3, 0.004, frames[:1]).occupancy
    for k in range(2, len(frames) + 1):
        occ = carve.carve([0.12] * 3, 0.004, frames[:k]).occupancy
        assert not np.any(occ & ~prev)
        prev = occ


def test_carve_conservative(frames):
    # nearest-pixel lookup can only misjudge voxels within half a pixel footprint
    # of the silhouette; the footprint at the far side of the sphere is 0.45 m / fx
    grid = carve.carve([0.12] * 3, RES, frames, margin=0.0)
    r = np.linalg.norm(grid.centers(), axis=1)
    half_pixel = 0.5 * 0.45 / frames[0].intrinsics.fx
    assert np.all(grid.occupancy.ravel()[r < 0.05 - half_pixel])


def test_carve_sphere_volume_oracle(frames):
    # visual hull of a sphere from 12 views is a little larger than the sphere
    grid = carve.carve([0.12] * 3, RES, frames)
    vol = grid.occupancy.sum() * RES ** 3
    sphere = 4 / 3 * np.pi * 0.05 ** 3
    assert sphere <= vol <= 1.25 * sphere


def test_marching_cubes_cube_grid():
    occ = np.zeros((6, 6, 6), dtype=bool)
    occ[1:5, 1:5, 1:5] = True
    grid = VoxelGrid(np.zeros(3), 1.0, occ)
    mesh = marching_cubes(grid)
    e = _edges(mesh)
    keys = {tuple(x) for x in e.tolist()}
    assert len(keys) == len(e)  # each directed edge once: consistent winding, manifold
    assert all((b, a) in keys for a, b in keys)  # closed
    assert mesh.signed_volume() > 0
    assert np.all(mesh.triangle_areas() > carve.MIN_TRIANGLE_AREA)
    # smoothed field is symmetric around the block centre (3, 3, 3)
    np.testing.assert_allclose(mesh.vertices.mean(axis=0), [3, 3, 3], atol=1e-9)


def test_marching_cubes_empty_grid():
    mesh = marching_cubes(VoxelGrid(np.zeros(3), 1.0, np.zeros((3, 3, 3), dtype=bool)))
    assert mesh.is_empty
    with pytest.raises(EmptyMesh):
        tight_box(mesh)


def test_marching_cubes_ball_volume():
    # oracle: volume of the occupancy's iso-surface approaches the voxelised ball volume
    n = 40
    idx = np.indices((n, n, n)).reshape(3, -1).T + 0.5
    occ = (np.linalg.norm(idx - n / 2, axis=1) < 15).reshape(n, n, n)
    mesh = marching_cubes(VoxelGrid(np.zeros(3), 1.0, occ))
    assert mesh.signed_volume() == pytest.approx(occ.sum(), rel=0.03)


def test_laplacian_examples():
    tet = TriMesh([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                  [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    assert laplacian_smooth(tet, 0) is tet
    out = laplacian_smooth(tet, 1, 1.0)
    np.testing.assert_allclose(out.vertices.mean(axis=0), 0, atol=1e-9)
    assert np.linalg.norm(out.vertices, axis=1).max() < np.linalg.norm(tet.vertices, axis=1).min()
    assert np.array_equal(out.triangles, tet.triangles)


def test_laplacian_reduces_noise():
    n = 30
    idx = np.indices((n, n, n)).reshape(3, -1).T + 0.5
    occ = (np.linalg.norm(idx - n / 2, axis=1) < 10).reshape(n, n, n)
    ball = marching_cubes(VoxelGrid(-np.full(3, n / 2), 1.0, occ))
    rng = np.random.default_rng(4)
    noisy = ball.vertices * (1 + 0.05 * rng.uniform(-1, 1, size=(len(ball.vertices), 1)))
    mesh = TriMesh(noisy, ball.triangles)
    out = laplacian_smooth(mesh, 10, 0.5)
    r0, r1 = np.linalg.norm(noisy, axis=1), np.linalg.norm(out.vertices, axis=1)
    assert np.abs(r1 - r1.mean()).max() < np.abs(r0 - r0.mean()).max()
    assert len(out.vertices) == len(mesh.vertices) and np.array_equal(out.triangles, mesh.triangles)


def test_tight_box_examples():
    cube = box_mesh((1, 1, 1))
    shifted = TriMesh(cube.vertices + [0.1, 0, 0], cube.triangles)
    ext, rc = tight_box(shifted)
    np.testing.assert_allclose(ext, [1, 1, 1])
    np.testing.assert_allclose(rc.translation, [-0.1, 0, 0], atol=1e-15)
    ext, rc = tight_box(cube)
    assert rc.allclose(RigidTransform())


def test_sphere_pipeline(frames):
    mesh, ext, rc = carve.annotate([0.12] * 3, RES, frames)
    assert np.all(np.abs(ext - 0.1) <= 2 * RES)
    truth = sphere_points(10_000, 0.05, 0)
    assert f_score(truth, sample_surface(mesh, 10_000, 0), 0.01)[2] >= 0.95
    e = _edges(mesh)
    assert len({tuple(x) for x in e.tolist()}) == len(e)


def test_cube_pipeline():
    side = 0.08
    fr = mesh_frames(box_mesh((side, side, side)))
    _, ext, _ = carve.annotate([0.1] * 3, RES, fr)
    assert np.all(np.abs(ext - side) <= 2 * RES)


def test_icosahedron_directions():
    d = icosahedron_directions()
    assert d.shape == (12, 3)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
