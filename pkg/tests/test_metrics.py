import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catpose_eval.errors import DegenerateDiameter, EmptyInput
from catpose_eval.geometry import OrientedBox, RigidTransform, compose, rot_x, rot_y, rot_z, transform_points
from catpose_eval.metrics import (
    EvalConfig,
    Estimate,
    Frame,
    GroundTruth,
    SymmetryClass,
    average_distance,
    chamfer_distance,
    evaluate_instance,
    f_score,
    iou_axis_aligned,
    iou_oriented,
    nad,
    rotation_error,
    symmetry_for,
    translation_error,
)
from catpose_eval.datasets.fixtures import box_mesh, category_mesh, cylinder_mesh, mesh_extents
from catpose_eval.spatial import NnIndex

from conftest import brute_nn, random_pose

I = RigidTransform.identity()
SYM = SymmetryClass.AXIS_Y


def test_translation_error():
    t = RigidTransform(np.eye(3), [1, 2, 3])
    assert translation_error(t, t) == 0.0
    assert translation_error(I, RigidTransform(np.eye(3), [0, 0.03, 0.04])) == pytest.approx(0.05, rel=1e-15)


def test_translation_error_left_composition(rng):
    a, b, t = random_pose(rng), random_pose(rng), random_pose(rng)
    assert translation_error(compose(t, a), compose(t, b)) == pytest.approx(translation_error(a, b), abs=1e-12)


def test_rotation_error_examples():
    assert rotation_error(I, I) == 0.0
    assert rotation_error(RigidTransform(rot_z(math.pi / 2)), I) == pytest.approx(math.pi / 2, abs=1e-12)
    assert rotation_error(RigidTransform(rot_y(math.radians(137))), I, SYM) == pytest.approx(0.0, abs=1e-12)
    assert rotation_error(RigidTransform(rot_x(math.pi)), I) == pytest.approx(math.pi, abs=1e-9)


def test_rotation_error_small_angles_precise():
    for a in (1e-6, 1e-4, 0.01):
        assert rotation_error(RigidTransform(rot_z(a)), I) == pytest.approx(a, rel=1e-6)


def test_symmetric_error_matches_dense_sweep():
    # oracle: minimum geodesic angle over a dense sweep of corrections about y
    phis = np.linspace(-math.pi, math.pi, 200_001)
    for theta in (0.3, 1.7, -2.5):
        est = RigidTransform(rot_x(math.radians(10)) @ rot_y(theta))
        r = est.rotation
        c, s = np.cos(phis), np.sin(phis)
        # trace(R Ry(phi)) for all phi at once
        tr = r[0, 0] * c - r[0, 2] * s + r[1, 1] + r[2, 0] * s + r[2, 2] * c
        best = float(np.min(np.arccos(np.clip((tr - 1) / 2, -1, 1))))
        got = rotation_error(I, est, SYM)
        assert got == pytest.approx(math.radians(10), abs=1e-9)
        assert got == pytest.approx(best, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi))
def test_symmetric_error_ignores_up_spin(seed, theta):
    t = random_pose(np.random.default_rng(seed))
    est = RigidTransform(t.rotation @ rot_y(theta), t.translation)
    assert rotation_error(t, est, SYM) <= 1e-9
    assert 0 <= rotation_error(t, est) <= math.pi


def test_iou_examples():
    a = OrientedBox(I, [1, 1, 1])
    assert iou_oriented(a, a) == pytest.approx(1.0)
    assert iou_oriented(a, OrientedBox(RigidTransform(np.eye(3), [3, 0, 0]), [1, 1, 1])) == 0.0
    b = OrientedBox(RigidTransform(np.eye(3), [0.5, 0, 0]), [1, 1, 1])
    assert iou_oriented(a, b) == pytest.approx(1 / 3, rel=1e-12)


def test_iou_rotated_cube_monte_carlo():
    a = OrientedBox(I, [1, 1, 1])
    b = OrientedBox(RigidTransform(rot_z(math.pi / 4)), [1, 1, 1])
    exact = iou_oriented(a, b)
    inter = 2 * math.sqrt(2) - 2
    assert exact == pytest.approx(inter / (2 - inter), rel=1e-12)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-math.sqrt(0.5), math.sqrt(0.5), size=(1_000_000, 3))
    pts[:, 2] = rng.uniform(-0.5, 0.5, size=len(pts))
    in_a = a.contains(pts)
    in_b = b.contains(pts)
    mc = np.sum(in_a & in_b) / np.sum(in_a | in_b)
    assert abs(exact - mc) <= 0.005


@given(st.integers(0, 2**32 - 1))
def test_iou_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a = OrientedBox(random_pose(rng, 0.3), rng.uniform(0.2, 1.0, size=3))
    b = OrientedBox(random_pose(rng, 0.3), rng.uniform(0.2, 1.0, size=3))
    ab, ba = iou_oriented(a, b), iou_oriented(b, a)
    assert abs(ab - ba) <= 1e-9
    assert 0.0 <= ab <= 1.0
    assert iou_oriented(a, a) == pytest.approx(1.0, abs=1e-9)


def test_symmetric_iou_spun_bottle():
    box = OrientedBox(I, [0.06, 0.18, 0.06])
    spun = OrientedBox(RigidTransform(rot_y(math.pi / 2)), [0.06, 0.18, 0.06])
    assert iou_oriented(box, spun, SYM) == pytest.approx(1.0, abs=1e-9)
    # spin by a non-multiple of 10 deg still lands within one step of alignment
    odd = OrientedBox(RigidTransform(rot_y(math.radians(37))), [0.06, 0.18, 0.06])
    assert iou_oriented(box, odd, SYM) >= iou_oriented(box, odd)


def test_axis_aligned_iou_examples():
    cube = box_mesh((1, 1, 1)).vertices
    assert iou_axis_aligned(cube, cube) == 1.0
    assert iou_axis_aligned(cube, cube + [5, 0, 0]) == 0.0
    turned = transform_points(RigidTransform(rot_z(math.pi / 4)), cube)
    # AABB of the turned cube is sqrt(2) x sqrt(2) x 1, containing the original
    assert iou_axis_aligned(cube, turned) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(EmptyInput):
        iou_axis_aligned(np.zeros((0, 3)), cube)


def test_average_and_chamfer_examples():
    s = np.array([[0.0, 0, 0], [1, 2, 3]])
    assert average_distance(s, NnIndex(s)) == 0.0
    assert average_distance([[0, 0, 0]], NnIndex([[0, 0, 1]])) == 1.0
    assert average_distance([[0, 0, 0], [0, 0, 2]], [[0, 0, 0]]) == 1.0
    assert chamfer_distance(s, s) == 0.0
    assert chamfer_distance([[0, 0, 0]], [[0, 0, 1]]) == 1.0
    assert chamfer_distance([[0, 0, 0]], [[0, 0, 0], [0, 0, 2]]) == 0.5
    with pytest.raises(EmptyInput):
        chamfer_distance(np.zeros((0, 3)), s)


def test_chamfer_symmetric_exactly(rng):
    a, b = rng.normal(size=(300, 3)), rng.normal(size=(200, 3))
    assert chamfer_distance(a, b) == chamfer_distance(b, a)
    _, da = brute_nn(b, a)
    _, db = brute_nn(a, b)
    assert chamfer_distance(a, b) == pytest.approx(0.5 * da.mean() + 0.5 * db.mean(), rel=1e-12)


def test_nad_examples():
    s = np.array([[0.0, 0, 0], [0, 0, 1]])
    t = np.array([[0.0, 0, 0], [0, 0, 1], [0, 0, 3]])
    # oracle: brute-force distances and diameters
    _, d_st = brute_nn(t, s)
    _, d_ts = brute_nn(s, t)
    want = max(d_st.mean() / 1.0, d_ts.mean() / 3.0)
    assert want == pytest.approx(2 / 9)
    assert nad(s, t) == pytest.approx(want, rel=1e-12)
    assert nad(s, s) == 0.0
    assert nad(2 * s, 2 * t) == pytest.approx(nad(s, t), abs=1e-9)
    with pytest.raises(DegenerateDiameter):
        nad([[0, 0, 0], [0, 0, 0]], t)
    with pytest.raises(DegenerateDiameter):
        nad([[0, 0, 0]], t)


def test_fscore_examples():
    s = np.array([[0.0, 0, 0], [1, 1, 1]])
    assert f_score(s, s, 0.01) == (1.0, 1.0, 1.0)
    assert f_score([[0, 0, 0]], [[0, 0, 0.02]], 0.01) == (0.0, 0.0, 0.0)
    a, b, c = [0.0, 0, 0], [5.0, 0, 0], [0.0, 5, 0]
    assert f_score([a, b], [a, c], 0.01) == (0.5, 0.5, 0.5)
    # strict inequality at exactly delta
    assert f_score([[0, 0, 0]], [[0, 0, 0.5]], 0.5)[2] == 0.0


def test_fscore_monotone_in_delta(rng):
    a, b = rng.normal(size=(200, 3)), rng.normal(size=(200, 3))
    fs = [f_score(a, b, d)[2] for d in np.linspace(0.01, 2, 30)]
    assert all(x <= y for x, y in zip(fs, fs[1:]))


def _bottle_gt(pose=I):
    mesh = category_mesh("bottle")
    return GroundTruth(mesh, pose, mesh_extents(mesh), "bottle", SYM, "b0")


def test_evaluate_identity(rng):
    gt = _bottle_gt(random_pose(rng))
    cfg = EvalConfig(n_samples=2000, seed=3)
    e = evaluate_instance(gt, Estimate(gt.mesh, gt.pose, gt.extents), cfg)
    assert e.d == 0 and e.delta == 0
    assert e.iou_oriented == pytest.approx(1.0, abs=1e-9)
    assert e.iou_axis_aligned == pytest.approx(1.0, abs=1e-9)
    assert e.cd < 0.005 and e.f_score == 1.0


def test_evaluate_camera_vs_canonical_frame():
    mesh = box_mesh((0.1, 0.1, 0.1))
    gt = GroundTruth(mesh, I, mesh_extents(mesh), "camera", SymmetryClass.NONE, "c0")
    est = Estimate(mesh, RigidTransform(np.eye(3), [0, 0, 0.01]), mesh_extents(mesh))
    cam = evaluate_instance(gt, est, EvalConfig(n_samples=3000, seed=1))
    can = evaluate_instance(gt, est, EvalConfig(n_samples=3000, seed=1, frame=Frame.CANONICAL))
    assert cam.d == pytest.approx(0.01) and cam.delta == 0
    assert cam.f_score < 0.9
    assert can.f_score == 1.0


def test_evaluate_symmetric_spin():
    gt = _bottle_gt()
    est = Estimate(gt.mesh, RigidTransform(rot_y(math.pi / 2)), gt.extents)
    e = evaluate_instance(gt, est, EvalConfig(n_samples=1000))
    assert e.delta <= 1e-9
    assert e.iou_oriented == pytest.approx(1.0, abs=1e-9)


def test_evaluate_points_verbatim_and_missing_extents():
    gt = _bottle_gt()
    pts = np.array([[0.0, 0.5, 0.0], [0.0, 0.6, 0.0]])
    e = evaluate_instance(gt, Estimate(pts, I), EvalConfig(n_samples=500))
    assert math.isnan(e.iou_oriented)
    assert e.iou_axis_aligned == 0.0
    assert (e.f_recall, e.f_precision, e.f_score) == (0.0, 0.0, 0.0)


@given(st.integers(0, 2**32 - 1))
def test_metrics_invariant_under_common_transform(seed):
    rng = np.random.default_rng(seed)
    mesh = cylinder_mesh(0.03, 0.1, segments=12)
    gt_pose, est_pose, t = random_pose(rng, 0.2), random_pose(rng, 0.2), random_pose(rng)
    gt = GroundTruth(mesh, gt_pose, mesh_extents(mesh), "can", SYM)
    est = Estimate(mesh, est_pose, mesh_extents(mesh))
    cfg = EvalConfig(n_samples=300, seed=seed)
    a = evaluate_instance(gt, est, cfg)
    b = evaluate_instance(GroundTruth(mesh, compose(t, gt_pose), gt.extents, "can", SYM),
                          Estimate(mesh, compose(t, est_pose), est.extents), cfg)
    for f in ("d", "delta", "cd", "nad", "f_score", "iou_oriented"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-9), f


def test_symmetry_defaults_and_overrides():
    for c in ("bottle", "bowl", "can"):
        assert symmetry_for(c) is SYM
    for c in ("mug", "laptop", "camera", "unknown"):
        assert symmetry_for(c) is SymmetryClass.NONE
    assert symmetry_for("mug", {"mug": "axis_y"}) is SYM
