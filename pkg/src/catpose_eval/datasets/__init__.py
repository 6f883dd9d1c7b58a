"""File formats, manifests, synthetic fixtures and camera helpers."""

from .camera import CameraIntrinsics, look_at, render_mesh_depth, render_sphere_depth
from .formats import (
    load_depth,
    load_depth_raw,
    load_mesh,
    load_pointset,
    save_depth,
    save_mesh,
    save_pointset,
)
from .manifest import (
    SCHEMA_VERSION,
    AnnotationJob,
    GroundTruthInstance,
    PredictionInstance,
    group_hypotheses,
    load_annotation_frames,
    load_ground_truth,
    load_predictions,
    orientation_distribution,
    write_ground_truth,
    write_orientation_csv,
    write_predictions,
)
from .fixtures import PLANS, generate_fixture

__all__ = [
    "CameraIntrinsics", "look_at", "render_mesh_depth", "render_sphere_depth",
    "load_depth", "load_depth_raw", "load_mesh", "load_pointset", "save_depth", "save_mesh",
    "save_pointset", "SCHEMA_VERSION", "AnnotationJob", "GroundTruthInstance", "PredictionInstance",
    "group_hypotheses", "load_annotation_frames", "load_ground_truth", "load_predictions",
    "orientation_distribution", "write_ground_truth", "write_orientation_csv", "write_predictions",
    "PLANS", "generate_fixture",
]
