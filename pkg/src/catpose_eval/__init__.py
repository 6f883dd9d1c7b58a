"""Evaluation toolkit for category-level 6D pose and shape estimation.

Pose errors, oriented/axis-aligned IoU, reconstruction metrics (CD, NAD,
F-score), thresholded precision with sweeps, file interfaces, synthetic
fixtures and a depth-carving shape annotation pipeline.
"""

from .geometry import OrientedBox, RigidTransform, compose, invert, transform_points
from .sampling import TriMesh, derive_seed, diameter, sample_surface
from .spatial import NnIndex
from .metrics import (
    EvalConfig,
    Estimate,
    GroundTruth,
    InstanceEval,
    SymmetryClass,
    chamfer_distance,
    evaluate_instance,
    f_score,
    iou_axis_aligned,
    iou_oriented,
    nad,
    rotation_error,
    translation_error,
)
from .aggregate import PRESETS, Curve, PrecisionReport, Thresholds, precision, precision_best_worst, sweep

__version__ = "0.1.0"

__all__ = [
    "OrientedBox", "RigidTransform", "compose", "invert", "transform_points",
    "TriMesh", "derive_seed", "diameter", "sample_surface", "NnIndex",
    "EvalConfig", "Estimate", "GroundTruth", "InstanceEval", "SymmetryClass",
    "chamfer_distance", "evaluate_instance", "f_score", "iou_axis_aligned", "iou_oriented",
    "nad", "rotation_error", "translation_error",
    "PRESETS", "Curve", "PrecisionReport", "Thresholds", "precision", "precision_best_worst", "sweep",
]
