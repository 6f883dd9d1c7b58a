"""JSON manifests for ground truth, predictions and annotation frames.

Every manifest is one JSON document carrying ``"schema_version": 1``.
Paths inside a manifest are relative to the manifest's directory; poses are
``{"rotation": [w, x, y, z], "translation": [x, y, z]}`` in meters.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..errors import InputError, ParseError, SchemaVersionError, ValidationError
from ..geometry import RigidTransform
from ..metrics import SymmetryClass, symmetry_for
from ..sampling import TriMesh
from .camera import CameraIntrinsics
from .formats import MESH_SUFFIXES, POINTSET_SUFFIXES, load_mesh, load_pointset, relative_path

SCHEMA_VERSION = 1
EXTENTS_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class GroundTruthInstance:
    instance_id: str
    category: str
    symmetry: SymmetryClass
    pose: RigidTransform
    mesh_path: Path
    extents: np.ndarray
    mesh: Optional[TriMesh] = field(default=None, repr=False)
    mask: Optional[Dict[str, Any]] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class PredictionInstance:
    instance_id: str
    pose: RigidTransform
    shape_path: Path
    shape_kind: str  # "mesh" or "points"
    extents: Optional[np.ndarray] = None
    hypothesis_index: Optional[int] = None
    shape: Union[TriMesh, np.ndarray, None] = field(default=None, repr=False)

    @property
    def needs_sampling(self):
        return self.shape_kind == "mesh"


def read_json(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{exc.msg} (column {exc.colno})", path, exc.lineno, exc.pos) from exc
    if not isinstance(doc, dict):
        raise ParseError("manifest must be a JSON object", path, 1, 0)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return doc


def parse_pose(obj, where) -> RigidTransform:
    try:
        rot, trans = obj["rotation"], obj["translation"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{where}: pose needs 'rotation' and 'translation'") from exc
    t = np.asarray(trans, dtype=float)
    if t.shape != (3,) or not np.all(np.isfinite(t)):
        raise ValidationError(f"{where}: translation must be 3 finite numbers")
    try:
        return RigidTransform.from_quaternion(rot, t)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def pose_to_json(t: RigidTransform):
    return {"rotation": [float(x) for x in t.as_quaternion()],
            "translation": [float(x) for x in t.translation]}


def _extents(value, where):
    e = np.asarray(value, dtype=float)
    if e.shape != (3,) or not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise ValidationError(f"{where}: extents must be 3 positive numbers")
    return e


def _instances(doc, path):
    inst = doc.get("instances")
    if not isinstance(inst, list):
        raise ParseError("'instances' must be a list", path)
    return inst


def load_ground_truth(manifest_path, *, load_meshes=True) -> List[GroundTruthInstance]:
    """Parse and validate a ground-truth manifest; instances keep manifest order."""
    path = Path(manifest_path)
    doc = read_json(path)
    base = path.parent
    overrides = doc.get("symmetry") or {}
    if "camera" in doc:
        CameraIntrinsics.from_dict(doc["camera"])
    seen = set()
    out = []
    for k, entry in enumerate(_instances(doc, path)):
        iid = str(entry.get("instance_id", ""))
        where = f"{path}: instance {iid or k}"
        if not iid:
            raise ValidationError(f"{where}: missing instance_id")
        if iid in seen:
            raise ParseError(f"duplicate instance_id {iid!r}", path)
        seen.add(iid)
        category = str(entry.get("category", ""))
        try:
            sym = SymmetryClass(entry["symmetry"]) if "symmetry" in entry else symmetry_for(category, overrides)
        except ValueError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
        pose = parse_pose(entry.get("pose"), where)
        if "mesh" not in entry:
            raise ValidationError(f"{where}: missing 'mesh'")
        mesh_path = (base / entry["mesh"]).resolve()
        extents = _extents(entry.get("extents"), where)
        mesh = None
        if load_meshes:
            if not mesh_path.is_file():
                raise ValidationError(f"{where}: mesh file not found: {mesh_path}")
            mesh = load_mesh(mesh_path)
            if len(mesh.vertices) == 0:
                raise ValidationError(f"{where}: mesh {mesh_path} has no vertices")
            aabb = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
            if np.max(np.abs(aabb - extents)) > EXTENTS_TOL:
                raise ValidationError(
                    f"{where}: extents {extents.tolist()} disagree with mesh AABB {aabb.tolist()}"
                )
        out.append(GroundTruthInstance(iid, category, sym, pose, mesh_path, extents, mesh,
                                       entry.get("mask")))
    return out


def _shape_entry(entry, base, where):
    if "mesh" in entry and "points" in entry:
        raise ValidationError(f"{where}: give either 'mesh' or 'points', not both")
    if "mesh" in entry:
        return (base / entry["mesh"]).resolve(), "mesh"
    if "points" in entry:
        return (base / entry["points"]).resolve(), "points"
    raise ValidationError(f"{where}: prediction needs a 'mesh' or 'points' shape")


def load_predictions(manifest_path, *, load_shapes=True) -> List[PredictionInstance]:
    """Parse a prediction manifest. Point sets are used verbatim; meshes are sampled later."""
    path = Path(manifest_path)
    doc = read_json(path)
    base = path.parent
    out = []
    by_id: Dict[str, List[Optional[int]]] = {}
    for k, entry in enumerate(_instances(doc, path)):
        iid = str(entry.get("instance_id", ""))
        where = f"{path}: instance {iid or k}"
        if not iid:
            raise ValidationError(f"{where}: missing instance_id")
        hyp = entry.get("hypothesis_index")
        if hyp is not None and (not isinstance(hyp, int) or hyp < 0):
            raise ValidationError(f"{where}: hypothesis_index must be a non-negative integer")
        by_id.setdefault(iid, []).append(hyp)
        pose = parse_pose(entry.get("pose"), where)
        shape_path, kind = _shape_entry(entry, base, where)
        extents = _extents(entry["extents"], where) if entry.get("extents") is not None else None
        shape = None
        if load_shapes:
            if not shape_path.is_file():
                raise ValidationError(f"{where}: shape file not found: {shape_path}")
            if kind == "mesh":
                if shape_path.suffix.lower() not in MESH_SUFFIXES:
                    raise ValidationError(f"{where}: mesh must be .obj")
                shape = load_mesh(shape_path)
            else:
                if shape_path.suffix.lower() not in POINTSET_SUFFIXES:
                    raise ValidationError(f"{where}: point set must be .ply")
                shape = load_pointset(shape_path)
                if len(shape) == 0:
                    raise ValidationError(f"{where}: empty point set")
        out.append(PredictionInstance(iid, pose, shape_path, kind, extents, hyp, shape))
    for iid, hyps in by_id.items():
        if len(hyps) > 1 and any(h is None for h in hyps):
            raise ParseError(f"duplicate instance_id {iid!r} without hypothesis_index", path)
        if hyps[0] is not None and sorted(hyps) != list(range(len(hyps))):
            raise ParseError(f"hypothesis_index for {iid!r} must be dense 0..{len(hyps) - 1}", path)
    return out


def group_hypotheses(preds: List[PredictionInstance]) -> Dict[str, List[PredictionInstance]]:
    """Predictions per instance id, ordered by hypothesis index."""
    groups: Dict[str, List[PredictionInstance]] = {}
    for p in preds:
        groups.setdefault(p.instance_id, []).append(p)
    for hyps in groups.values():
        hyps.sort(key=lambda p: p.hypothesis_index or 0)
    return groups


def write_ground_truth(path, instances: List[GroundTruthInstance], camera: Optional[CameraIntrinsics] = None,
                       symmetry_overrides=None):
    path = Path(path)
    doc: Dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if camera is not None:
        doc["camera"] = camera.as_dict()
    if symmetry_overrides:
        doc["symmetry"] = dict(symmetry_overrides)
    doc["instances"] = []
    for g in instances:
        entry = {
            "instance_id": g.instance_id,
            "category": g.category,
            "symmetry": SymmetryClass(g.symmetry).value,
            "pose": pose_to_json(g.pose),
            "mesh": relative_path(g.mesh_path, path.parent),
            "extents": [float(x) for x in g.extents],
        }
        if g.mask is not None:
            entry["mask"] = g.mask
        doc["instances"].append(entry)
    _dump(path, doc)


def write_predictions(path, preds: List[PredictionInstance]):
    path = Path(path)
    doc: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "instances": []}
    for p in preds:
        entry: Dict[str, Any] = {"instance_id": p.instance_id, "pose": pose_to_json(p.pose),
                                 p.shape_kind: relative_path(p.shape_path, path.parent)}
        if p.extents is not None:
            entry["extents"] = [float(x) for x in p.extents]
        if p.hypothesis_index is not None:
            entry["hypothesis_index"] = p.hypothesis_index
        doc["instances"].append(entry)
    _dump(path, doc)


def _dump(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def orientation_distribution(gts: List[GroundTruthInstance]) -> np.ndarray:
    """Camera-frame direction of each object's canonical +y (up) axis, shape ``(n, 3)``."""
    if not gts:
        return np.zeros((0, 3))
    up = np.stack([g.pose.rotation[:, 1] for g in gts])
    return up / np.linalg.norm(up, axis=1, keepdims=True)


def write_orientation_csv(path, gts: List[GroundTruthInstance]):
    vecs = orientation_distribution(gts)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "category", "up_x", "up_y", "up_z"])
        for g, v in zip(gts, vecs):
            w.writerow([g.instance_id, g.category] + [repr(float(x)) for x in v])


@dataclass(frozen=True, eq=False)
class AnnotationJob:
    """Inputs for shape annotation of one object: box size plus posed depth frames."""

    extents: np.ndarray
    frames: list
    instance_id: str = "object"
    category: str = ""
    frame_ids: tuple = ()


def load_annotation_frames(manifest_path) -> AnnotationJob:
    """Frames manifest: ``camera``, ``extents`` and ``frames: [{depth, box_pose}]``."""
    from ..carve import AnnotatedFrame
    from .formats import load_depth

    path = Path(manifest_path)
    doc = read_json(path)
    base = path.parent
    if "camera" not in doc:
        raise ValidationError(f"{path}: frames manifest needs 'camera'")
    default_cam = CameraIntrinsics.from_dict(doc["camera"])
    extents = _extents(doc.get("extents"), str(path))
    frames, ids = [], []
    entries = doc.get("frames")
    if not isinstance(entries, list):
        raise ParseError("'frames' must be a list", path)
    for k, entry in enumerate(entries):
        where = f"{path}: frame {entry.get('frame_id', k)}"
        cam = CameraIntrinsics.from_dict(entry["camera"]) if "camera" in entry else default_cam
        if "depth" not in entry:
            raise ValidationError(f"{where}: missing 'depth'")
        depth_path = base / entry["depth"]
        if not depth_path.is_file():
            raise ValidationError(f"{where}: depth file not found: {depth_path}")
        depth = load_depth(depth_path, cam)
        frames.append(AnnotatedFrame(depth, cam, parse_pose(entry.get("box_pose"), where)))
        ids.append(str(entry.get("frame_id", k)))
    return AnnotationJob(extents, frames, str(doc.get("instance_id", "object")),
                         str(doc.get("category", "")), tuple(ids))
