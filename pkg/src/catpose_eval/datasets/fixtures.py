"""Synthetic desk-scale datasets with planted errors and a sidecar oracle.

Each plan writes parametric meshes, a ground-truth manifest, a prediction
manifest and ``oracle.json`` recording which predictions are correct by
construction. Output depends only on ``(plan, seed)``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..geometry import RigidTransform, invert
from ..metrics import SymmetryClass, symmetry_for
from ..sampling import TriMesh, make_rng, sample_surface
from .camera import CameraIntrinsics, look_at, render_mesh_depth, render_sphere_depth
from .formats import save_depth, save_mesh, save_pointset
from .manifest import (
    SCHEMA_VERSION,
    GroundTruthInstance,
    PredictionInstance,
    pose_to_json,
    write_ground_truth,
    write_predictions,
)

PLANS = ("7-of-12", "identity", "symmetry", "carve-sphere", "carve-cube", "cylinder")

# 10 cm tall cylinder used by the sampling-sensitivity experiment
SENSITIVITY_CYLINDER = {"radius": 0.025, "height": 0.10}

DEFAULT_CAMERA = CameraIntrinsics(fx=525.0, fy=525.0, cx=319.5, cy=239.5, width=640, height=480,
                                  depth_scale=0.0001)


def box_mesh(extents) -> TriMesh:
    hx, hy, hz = np.asarray(extents, dtype=float) / 2.0
    v = np.array([[sx * hx, sy * hy, sz * hz] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)])
    quads = [(1, 3, 7, 5), (0, 4, 6, 2), (2, 6, 7, 3), (0, 1, 5, 4), (4, 5, 7, 6), (0, 2, 3, 1)]
    tris = [(a, b, c) for a, b, c, d in quads] + [(a, c, d) for a, b, c, d in quads]
    return TriMesh(v, tris)


def cylinder_mesh(radius, height, segments=48) -> TriMesh:
    """Closed cylinder around +y, centred at the origin."""
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), np.zeros(segments), radius * np.sin(ang)], axis=1)
    bottom = ring + [0.0, -height / 2.0, 0.0]
    top = ring + [0.0, height / 2.0, 0.0]
    v = np.concatenate([bottom, top, [[0.0, -height / 2.0, 0.0], [0.0, height / 2.0, 0.0]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [(i, segments + i, j), (j, segments + i, segments + j)]
        tris += [(cb, i, j), (ct, segments + j, segments + i)]
    mesh = TriMesh(v, tris)
    return mesh if mesh.signed_volume() > 0 else TriMesh(v, np.asarray(tris)[:, ::-1])


def torus_mesh(major, minor, center, segments=32, tube_segments=12) -> TriMesh:
    """Torus in the x-y plane (axis along z)."""
    u = 2.0 * np.pi * np.arange(segments) / segments
    w = 2.0 * np.pi * np.arange(tube_segments) / tube_segments
    uu, ww = np.meshgrid(u, w, indexing="ij")
    r = major + minor * np.cos(ww)
    v = np.stack([r * np.cos(uu), r * np.sin(uu), minor * np.sin(ww)], axis=-1).reshape(-1, 3)
    v = v + np.asarray(center, dtype=float)
    tris = []
    for i in range(segments):
        for j in range(tube_segments):
            a = i * tube_segments + j
            b = ((i + 1) % segments) * tube_segments + j
            c = ((i + 1) % segments) * tube_segments + (j + 1) % tube_segments
            d = i * tube_segments + (j + 1) % tube_segments
            tris += [(a, b, c), (a, c, d)]
    return TriMesh(v, tris)


def merge_meshes(*meshes) -> TriMesh:
    verts, tris, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += len(m.vertices)
    return TriMesh(np.concatenate(verts), np.concatenate(tris))


def recentered(mesh: TriMesh) -> TriMesh:
    """Shift so the vertex AABB is centred at the origin."""
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    return TriMesh(mesh.vertices - (lo + hi) / 2.0, mesh.triangles)


def scaled(mesh: TriMesh, factor) -> TriMesh:
    return TriMesh(mesh.vertices * factor, mesh.triangles)


def mug_mesh(radius=0.04, height=0.09) -> TriMesh:
    body = cylinder_mesh(radius, height)
    handle = torus_mesh(0.025, 0.006, (radius + 0.012, 0.0, 0.0))
    return recentered(merge_meshes(body, handle))


def category_mesh(category) -> TriMesh:
    if category == "bottle":
        return cylinder_mesh(0.03, 0.18)
    if category == "can":
        return cylinder_mesh(0.033, 0.12)
    if category == "bowl":
        return cylinder_mesh(0.07, 0.06)
    if category == "mug":
        return mug_mesh()
    if category == "laptop":
        return box_mesh((0.30, 0.02, 0.22))
    if category == "camera":
        return box_mesh((0.12, 0.08, 0.07))
    raise ValueError(f"no fixture mesh for category {category!r}")


def mesh_extents(mesh: TriMesh):
    return mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)


def random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _axis_angle(axis, angle):
    x, y, z = _unit(axis)
    c, s = math.cos(angle), math.sin(angle)
    k = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return np.eye(3) + s * k + (1 - c) * (k @ k)


CATEGORIES = ("bottle", "bowl", "can", "mug", "laptop", "camera")

# kind, translation error (m), rotation error (deg), rotation axis in object frame
_SEVEN_OF_TWELVE = [
    ("bottle", "exact", 0.0, 0.0, None),
    ("bottle", "tilt", 0.0, 45.0, "x"),
    ("bowl", "small", 0.003, 1.5, "x"),
    ("bowl", "shift", 0.05, 0.0, None),
    ("can", "spin", 0.0, 120.0, "y"),
    ("can", "shift", 0.03, 0.0, None),
    ("mug", "small", 0.004, 2.0, "z"),
    ("mug", "turn", 0.0, 25.0, "y"),
    ("laptop", "points", 0.002, 1.0, "y"),
    ("laptop", "exact", 0.0, 0.0, None),
    ("camera", "small", 0.005, 1.0, "x"),
    ("camera", "shape", 0.0, 0.0, None),
]


def _plan_rows(plan):
    if plan == "7-of-12":
        return _SEVEN_OF_TWELVE
    rows = [(c, "exact", 0.0, 0.0, None) for c in CATEGORIES for _ in range(2)]
    if plan == "symmetry":
        rows[0] = ("bottle", "spin", 0.0, 45.0, "y")
    return rows


# planted errors that break the lenient preset (10 deg, 2 cm, F >= 0.6)
_INCORRECT_KINDS = {"tilt", "shift", "turn", "shape"}


def generate_fixture(plan: str, out_dir, seed: int = 0):
    """Write a synthetic dataset for ``plan`` into ``out_dir``; returns the oracle dict."""
    if plan not in PLANS:
        raise ValueError(f"unknown fixture plan {plan!r}; choose from {', '.join(PLANS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if plan.startswith("carve-"):
        return _carve_fixture(plan, out)
    if plan == "cylinder":
        save_mesh(out / "cylinder.obj", cylinder_mesh(**SENSITIVITY_CYLINDER))
        oracle = {"schema_version": SCHEMA_VERSION, "plan": plan, "target": dict(SENSITIVITY_CYLINDER)}
        (out / "oracle.json").write_text(json.dumps(oracle, indent=2) + "\n", encoding="utf-8")
        return oracle

    rng = make_rng(seed)
    (out / "meshes").mkdir(exist_ok=True)
    (out / "pred").mkdir(exist_ok=True)
    written = {}
    for cat in CATEGORIES:
        p = out / "meshes" / f"{cat}.obj"
        save_mesh(p, category_mesh(cat))
        written[cat] = p

    gts, preds, planted, correct = [], [], {}, {}
    for k, (cat, kind, d_err, deg_err, axis) in enumerate(_plan_rows(plan)):
        iid = f"{cat}_{k:02d}"
        mesh = category_mesh(cat)
        ext = mesh_extents(mesh)
        gt_pose = RigidTransform(random_rotation(rng),
                                 [rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1), rng.uniform(0.6, 1.0)])
        sym = symmetry_for(cat)
        gts.append(GroundTruthInstance(iid, cat, sym, gt_pose, written[cat], ext))

        rel = np.eye(3)
        if deg_err:
            rel = _axis_angle({"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis], math.radians(deg_err))
        shift = np.zeros(3)
        if d_err:
            shift = d_err * _unit(rng.normal(size=3))
        est_pose = RigidTransform(gt_pose.rotation @ rel, gt_pose.translation + shift)

        shape_path, shape_kind, est_ext = written[cat], "mesh", ext
        if kind == "shape":
            shape_path = out / "pred" / f"{iid}_scaled.obj"
            save_mesh(shape_path, scaled(mesh, 1.6))
            est_ext = ext * 1.6
        elif kind == "points":
            shape_path, shape_kind = out / "pred" / f"{iid}.ply", "points"
            save_pointset(shape_path, sample_surface(mesh, 10_000, seed ^ (1000 + k)))
        preds.append(PredictionInstance(iid, est_pose, shape_path, shape_kind, est_ext))

        delta = deg_err
        if sym is SymmetryClass.AXIS_Y and axis == "y":
            delta = 0.0
        planted[iid] = {"category": cat, "kind": kind, "d": d_err, "delta_deg": delta}
        correct[iid] = kind not in _INCORRECT_KINDS

    write_ground_truth(out / "gt.json", gts, DEFAULT_CAMERA)
    write_predictions(out / "pred.json", preds)

    per_cat = {}
    for g in gts:
        row = per_cat.setdefault(g.category, {"correct": 0, "count": 0})
        row["count"] += 1
        row["correct"] += int(correct[g.instance_id])
    for row in per_cat.values():
        row["precision"] = row["correct"] / row["count"]
    n_ok = sum(correct.values())
    oracle = {
        "schema_version": SCHEMA_VERSION,
        "plan": plan,
        "seed": int(seed),
        "preset": "lenient",
        "expected_correct": correct,
        "expected_count": len(gts),
        "expected_precision": n_ok / len(gts),
        "expected_correct_total": n_ok,
        "per_category": per_cat,
        "planted": planted,
    }
    (out / "oracle.json").write_text(json.dumps(oracle, indent=2) + "\n", encoding="utf-8")
    return oracle


def icosahedron_directions():
    p = (1.0 + math.sqrt(5.0)) / 2.0
    v = []
    for a in (-1.0, 1.0):
        for b in (-p, p):
            v += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    return np.array([_unit(x) for x in v])


def sphere_frames(radius=0.05, distance=0.4, camera=DEFAULT_CAMERA, far=2.0):
    """Depth frames of a sphere at the box origin seen from the 12 icosahedron directions."""
    from ..carve import AnnotatedFrame

    frames = []
    for direction in icosahedron_directions():
        cam_in_box = look_at(direction * distance, (0.0, 0.0, 0.0))
        box_pose = invert(cam_in_box)
        depth = render_sphere_depth(camera, box_pose.translation, radius, far=far)
        frames.append(AnnotatedFrame(depth, camera, box_pose))
    return frames


def mesh_frames(mesh, distance=0.4, camera=DEFAULT_CAMERA, far=2.0):
    """Like ``sphere_frames`` but z-buffering an arbitrary mesh placed at the box origin."""
    from ..carve import AnnotatedFrame

    frames = []
    for direction in icosahedron_directions():
        box_pose = invert(look_at(direction * distance, (0.0, 0.0, 0.0)))
        depth = render_mesh_depth(camera, mesh, box_pose)
        depth = np.where(depth > 0, depth, far)
        frames.append(AnnotatedFrame(depth, camera, box_pose))
    return frames


def _carve_fixture(plan, out):
    if plan == "carve-sphere":
        radius = 0.05
        frames = sphere_frames(radius)
        target = {"shape": "sphere", "radius": radius, "center": [0.0, 0.0, 0.0]}
        box = [0.12, 0.12, 0.12]
    else:
        side = 0.08
        frames = mesh_frames(box_mesh((side, side, side)))
        target = {"shape": "cube", "side": side, "center": [0.0, 0.0, 0.0]}
        box = [0.1, 0.1, 0.1]
    (out / "depth").mkdir(exist_ok=True)
    entries = []
    for k, fr in enumerate(frames):
        name = f"depth/frame_{k:02d}.pgm"
        save_depth(out / name, fr.depth, DEFAULT_CAMERA.depth_scale)
        entries.append({"frame_id": f"{k:02d}", "depth": name, "box_pose": pose_to_json(fr.box_pose)})
    doc = {"schema_version": SCHEMA_VERSION, "instance_id": plan.split("-", 1)[1],
           "category": "", "camera": DEFAULT_CAMERA.as_dict(), "extents": box, "frames": entries}
    (out / "frames.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    oracle = {"schema_version": SCHEMA_VERSION, "plan": plan, "target": target}
    (out / "oracle.json").write_text(json.dumps(oracle, indent=2) + "\n", encoding="utf-8")
    return oracle


__all__ = [
    "PLANS", "SENSITIVITY_CYLINDER", "generate_fixture", "box_mesh", "cylinder_mesh", "torus_mesh", "mug_mesh",
    "category_mesh", "sphere_frames", "mesh_frames", "icosahedron_directions", "random_rotation",
]
