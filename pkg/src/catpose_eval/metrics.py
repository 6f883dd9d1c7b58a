"""Per-instance pose and shape error metrics.

Shape metrics work on point sets sampled from surfaces. Pose metrics work
on rigid transforms and oriented boxes. ``evaluate_instance`` ties all of
them together for one ground-truth / estimate pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Optional, Union

import numpy as np

from .errors import DegenerateDiameter, EmptyInput, TooFewPoints
from .geometry import (
    OrientedBox,
    RigidTransform,
    aabb_iou,
    aabb_of_points,
    compose,
    intersection_volume,
    rot_y,
    transform_points,
)
from .sampling import DEFAULT_SAMPLES, TriMesh, as_points, diameter, sample_surface
from .spatial import NnIndex

DEFAULT_FSCORE_DELTA = 0.01
DEFAULT_SYMMETRY_STEPS = 36


class SymmetryClass(str, enum.Enum):
    NONE = "none"
    AXIS_Y = "axis_y"


DEFAULT_SYMMETRY = {
    "bottle": SymmetryClass.AXIS_Y,
    "bowl": SymmetryClass.AXIS_Y,
    "can": SymmetryClass.AXIS_Y,
    "mug": SymmetryClass.NONE,
    "laptop": SymmetryClass.NONE,
    "camera": SymmetryClass.NONE,
}


def symmetry_for(category: str, overrides=None) -> SymmetryClass:
    if overrides and category in overrides:
        return SymmetryClass(overrides[category])
    return DEFAULT_SYMMETRY.get(category, SymmetryClass.NONE)


class Frame(str, enum.Enum):
    CAMERA = "camera"
    CANONICAL = "canonical"


def _angle_between(cos_part, sin_part):
    # atan2 is the well-conditioned form of arccos(clamp(cos, -1, 1)) near 0 and pi
    return float(math.atan2(max(sin_part, 0.0), cos_part))


def translation_error(gt: RigidTransform, est: RigidTransform) -> float:
    return float(np.linalg.norm(gt.translation - est.translation))


def rotation_error(gt: RigidTransform, est: RigidTransform, sym=SymmetryClass.NONE) -> float:
    """Geodesic angle between the two rotations, in radians within [0, pi].

    With ``axis_y`` symmetry only the up-axes (second rotation columns) are
    compared, so any spin about the object's own y axis costs nothing.
    """
    if SymmetryClass(sym) is SymmetryClass.AXIS_Y:
        a, b = gt.rotation[:, 1], est.rotation[:, 1]
        return _angle_between(float(a @ b), float(np.linalg.norm(np.cross(a, b))))
    rel = gt.rotation @ est.rotation.T
    cos_part = (np.trace(rel) - 1.0) / 2.0
    axis = np.array([rel[2, 1] - rel[1, 2], rel[0, 2] - rel[2, 0], rel[1, 0] - rel[0, 1]])
    return _angle_between(float(np.clip(cos_part, -1.0, 1.0)), float(np.linalg.norm(axis) / 2.0))


def iou_boxes(a: OrientedBox, b: OrientedBox) -> float:
    inter = intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return float(min(max(inter / union, 0.0), 1.0))


def iou_oriented(gt_box: OrientedBox, est_box: OrientedBox, sym=SymmetryClass.NONE,
                 steps: int = DEFAULT_SYMMETRY_STEPS) -> float:
    """Exact oriented-box IoU; for ``axis_y`` the best of ``steps`` spins of the estimate."""
    if SymmetryClass(sym) is not SymmetryClass.AXIS_Y:
        return iou_boxes(gt_box, est_box)
    best = 0.0
    for k in range(steps):
        spin = RigidTransform(rot_y(2.0 * math.pi * k / steps))
        best = max(best, iou_boxes(gt_box, OrientedBox(compose(est_box.pose, spin), est_box.extents)))
    return best


def iou_axis_aligned(gt_pts, est_pts) -> float:
    """IoU of the axis-aligned boxes of two posed shapes (vertex or point arrays)."""
    gt_pts, est_pts = as_points(gt_pts), as_points(est_pts)
    if len(gt_pts) == 0 or len(est_pts) == 0:
        raise EmptyInput("axis-aligned IoU needs non-empty inputs")
    return aabb_iou(*aabb_of_points(gt_pts), *aabb_of_points(est_pts))


def _index(x):
    return x if isinstance(x, NnIndex) else NnIndex(x)


def _nn_distances(src, dst):
    src = as_points(src)
    if len(src) == 0:
        raise EmptyInput("empty source point set")
    return _index(dst).distances(src)


def average_distance(src, dst) -> float:
    """Mean distance from each point of ``src`` to its nearest neighbour in ``dst``."""
    return float(np.mean(_nn_distances(src, dst)))


def chamfer_distance(s, s_est) -> float:
    return 0.5 * average_distance(s, s_est) + 0.5 * average_distance(s_est, s)


def _nad_from_ad(ad_s, ad_est, s, s_est):
    try:
        d_s, d_e = diameter(s), diameter(s_est)
    except TooFewPoints as exc:
        raise DegenerateDiameter(str(exc)) from exc
    if d_s <= 0.0 or d_e <= 0.0:
        raise DegenerateDiameter("point set has zero diameter")
    return max(ad_s / d_s, ad_est / d_e)


def nad(s, s_est) -> float:
    """Normalized average distance: each directed AD over its source diameter, max of both."""
    s, s_est = as_points(s), as_points(s_est)
    return _nad_from_ad(average_distance(s, s_est), average_distance(s_est, s), s, s_est)


def _harmonic(p, r):
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def f_score(s, s_est, delta: float = DEFAULT_FSCORE_DELTA):
    """Reconstruction ``(recall, precision, F)`` at distance threshold ``delta`` (strict <)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    recall = float(np.mean(_nn_distances(s, s_est) < delta))
    precision = float(np.mean(_nn_distances(s_est, s) < delta))
    return recall, precision, _harmonic(precision, recall)


@dataclass(frozen=True)
class InstanceEval:
    """Every per-instance metric; NaN marks a field whose inputs were absent."""

    instance_id: str = ""
    category: str = ""
    d: float = math.nan
    delta: float = math.nan
    iou_oriented: float = math.nan
    iou_axis_aligned: float = math.nan
    cd: float = math.nan
    nad: float = math.nan
    f_recall: float = math.nan
    f_precision: float = math.nan
    f_score: float = math.nan
    fscore_delta: float = DEFAULT_FSCORE_DELTA
    missing: bool = False

    @classmethod
    def missing_prediction(cls, instance_id, category, fscore_delta=DEFAULT_FSCORE_DELTA):
        return cls(instance_id=instance_id, category=category, fscore_delta=fscore_delta, missing=True)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class GroundTruth:
    mesh: TriMesh
    pose: RigidTransform
    extents: Optional[np.ndarray]
    category: str = ""
    symmetry: SymmetryClass = SymmetryClass.NONE
    instance_id: str = ""


@dataclass(frozen=True)
class Estimate:
    """``shape`` is a TriMesh (sampled at eval time) or an ``(n, 3)`` array used verbatim."""

    shape: Union[TriMesh, np.ndarray]
    pose: RigidTransform
    extents: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EvalConfig:
    fscore_delta: float = DEFAULT_FSCORE_DELTA
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    frame: Frame = Frame.CAMERA
    symmetry_steps: int = DEFAULT_SYMMETRY_STEPS


def evaluate_instance(gt: GroundTruth, est: Estimate, cfg: EvalConfig = EvalConfig()) -> InstanceEval:
    gt_samples = sample_surface(gt.mesh, cfg.n_samples, cfg.seed)
    if isinstance(est.shape, TriMesh):
        est_samples = sample_surface(est.shape, cfg.n_samples, cfg.seed ^ 1)
        est_vertices = est.shape.vertices
    else:
        est_samples = est_vertices = as_points(est.shape)

    if Frame(cfg.frame) is Frame.CAMERA:
        s = transform_points(gt.pose, gt_samples)
        s_est = transform_points(est.pose, est_samples)
    else:
        s, s_est = gt_samples, est_samples

    iou = math.nan
    if gt.extents is not None and est.extents is not None:
        iou = iou_oriented(OrientedBox(gt.pose, gt.extents), OrientedBox(est.pose, est.extents),
                           gt.symmetry, cfg.symmetry_steps)

    index_gt, index_est = NnIndex(s), NnIndex(s_est)
    dist_gt = index_est.distances(s)
    dist_est = index_gt.distances(s_est)
    ad_gt, ad_est = float(np.mean(dist_gt)), float(np.mean(dist_est))
    try:
        nad_value = _nad_from_ad(ad_gt, ad_est, s, s_est)
    except DegenerateDiameter:
        nad_value = math.nan
    recall = float(np.mean(dist_gt < cfg.fscore_delta))
    precision = float(np.mean(dist_est < cfg.fscore_delta))

    return InstanceEval(
        instance_id=gt.instance_id,
        category=gt.category,
        d=translation_error(gt.pose, est.pose),
        delta=rotation_error(gt.pose, est.pose, gt.symmetry),
        iou_oriented=iou,
        iou_axis_aligned=iou_axis_aligned(
            transform_points(gt.pose, gt.mesh.vertices), transform_points(est.pose, est_vertices)
        ),
        cd=0.5 * ad_gt + 0.5 * ad_est,
        nad=nad_value,
        f_recall=recall,
        f_precision=precision,
        f_score=_harmonic(precision, recall),
        fscore_delta=cfg.fscore_delta,
    )

