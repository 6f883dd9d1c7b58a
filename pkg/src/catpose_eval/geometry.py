"""Rigid transforms, oriented boxes and exact convex-polytope volumes.

Everything here is immutable: arrays held by the dataclasses are flagged
read-only, so instances can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import EmptyInput, InvalidPolytope, ValidationError

ORTHO_TOL = 1e-9
REORTHO_TOL = 1e-6
CLIP_EPS = 1e-9
MIN_VOLUME = 1e-15
PLANARITY_TOL = 1e-7


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def polar_orthonormalize(m):
    """Nearest rotation matrix to ``m`` in the Frobenius sense."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1
        r = u @ vt
    return r


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation matrix plus translation (meters); maps frame ``j`` points into frame ``i``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValidationError(f"bad transform shapes {r.shape}, {t.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValidationError("transform has non-finite entries")
        err = np.max(np.abs(r.T @ r - np.eye(3)))
        if err > ORTHO_TOL or np.linalg.det(r) <= 0:
            raise ValidationError(
                f"rotation is not orthonormal with det +1 (max |RtR - I| = {err:.3g})"
            )
        object.__setattr__(self, "rotation", _frozen(r))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_matrix(cls, rotation, translation=(0.0, 0.0, 0.0), *, repair_tol=REORTHO_TOL):
        """Build from a possibly slightly drifted rotation.

        Matrices off by more than ``ORTHO_TOL`` but at most ``repair_tol`` are
        projected back onto SO(3); anything worse is rejected.
        """
        r = np.asarray(rotation, dtype=float)
        err = np.max(np.abs(r.T @ r - np.eye(3)))
        if err > ORTHO_TOL:
            if err > repair_tol or abs(np.linalg.det(r) - 1.0) > repair_tol:
                raise ValidationError(
                    f"rotation deviates from SO(3) by {err:.3g} (> {repair_tol:g})"
                )
            r = polar_orthonormalize(r)
        return cls(r, translation)

    @classmethod
    def from_quaternion(cls, wxyz, translation=(0.0, 0.0, 0.0), *, norm_tol=REORTHO_TOL):
        q = np.asarray(wxyz, dtype=float)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise ValidationError(f"quaternion must be 4 finite numbers, got {wxyz!r}")
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > norm_tol:
            raise ValidationError(f"quaternion is not unit (norm {norm:.9g})")
        r = Rotation.from_quat(q / norm, scalar_first=True).as_matrix()
        return cls.from_matrix(r, translation)

    def as_quaternion(self):
        """Unit quaternion (w, x, y, z) with w >= 0."""
        return Rotation.from_matrix(self.rotation).as_quat(canonical=True, scalar_first=True)

    def as_matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, pts):
        return transform_points(self, pts)

    def __matmul__(self, other):
        return compose(self, other)

    def allclose(self, other, atol=1e-9):
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def rot_x(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


def transform_points(t: RigidTransform, pts) -> np.ndarray:
    """Apply ``t`` to an ``(n, 3)`` array (or a single 3-vector)."""
    p = np.asarray(pts, dtype=float)
    return p @ t.rotation.T + t.translation


@dataclass(frozen=True, eq=False)
class OrientedBox:
    """Box with full side lengths ``extents`` centred at ``pose``'s origin."""

    pose: RigidTransform
    extents: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.extents, dtype=float)
        if e.shape != (3,) or not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise ValidationError(f"box extents must be 3 positive numbers, got {self.extents!r}")
        object.__setattr__(self, "extents", _frozen(e))

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def half_spaces(self):
        """The six bounding planes as ``(normal, offset)`` with ``normal . x <= offset`` inside."""
        r, t, half = self.pose.rotation, self.pose.translation, self.extents / 2.0
        planes = []
        for axis in range(3):
            for sign in (1.0, -1.0):
                n = sign * r[:, axis]
                planes.append((n, float(n @ t + half[axis])))
        return planes

    def as_polytope(self):
        return ConvexPolytope(obb_corners(self), _BOX_FACES)

    def contains(self, pts, tol=0.0):
        local = (np.asarray(pts, dtype=float) - self.pose.translation) @ self.pose.rotation
        return np.all(np.abs(local) <= self.extents / 2.0 + tol, axis=-1)


# corner k has sign bits (x: k&1, y: k&2, z: k&4); loops wound CCW seen from outside
_BOX_SIGNS = np.array([[1 if k & b else -1 for b in (1, 2, 4)] for k in range(8)], dtype=float)
_BOX_FACES = (
    (1, 3, 7, 5),  # +x
    (0, 4, 6, 2),  # -x
    (2, 6, 7, 3),  # +y
    (0, 1, 5, 4),  # -y
    (4, 5, 7, 6),  # +z
    (0, 2, 3, 1),  # -z
)


def obb_corners(box: OrientedBox) -> np.ndarray:
    """The 8 box corners in the box's parent frame, shape ``(8, 3)``."""
    return transform_points(box.pose, _BOX_SIGNS * (box.extents / 2.0))


def _newell_normal(pts):
    nxt = np.roll(pts, -1, axis=0)
    return np.array([
        np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
        np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
        np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
    ])


def _fan(faces):
    """Fan triangulation of every face loop as an ``(m, 3)`` index array."""
    tris = [(f[0], f[k], f[k + 1]) for f in faces for k in range(1, len(f) - 1)]
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def _signed_volume(vertices, faces):
    t = _fan(faces)
    if len(t) == 0:
        return 0.0
    a, b, c = vertices[t[:, 0]], vertices[t[:, 1]], vertices[t[:, 2]]
    # scalar triple product a . (b x c), written out to avoid np.cross overhead
    det = (a[:, 0] * (b[:, 1] * c[:, 2] - b[:, 2] * c[:, 1])
           + a[:, 1] * (b[:, 2] * c[:, 0] - b[:, 0] * c[:, 2])
           + a[:, 2] * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]))
    return float(np.sum(det)) / 6.0


class ConvexPolytope:
    """Convex polyhedron as a vertex array plus planar, outward-wound face loops.

    Winding is repaired on construction: if the signed volume comes out
    negative every loop is reversed.
    """

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        v = np.asarray(vertices, dtype=float).reshape(-1, 3)
        faces = tuple(tuple(int(i) for i in f) for f in faces)
        for f in faces:
            if len(f) < 3 or min(f) < 0 or max(f) >= len(v):
                raise InvalidPolytope(f"bad face loop {f}")
        if faces and _signed_volume(v, faces) < 0:
            faces = tuple(tuple(reversed(f)) for f in faces)
        v.setflags(write=False)
        self.vertices = v
        self.faces = faces

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), ())

    @property
    def is_empty(self):
        return len(self.faces) == 0

    def __repr__(self):
        return f"ConvexPolytope({len(self.vertices)} vertices, {len(self.faces)} faces)"


def volume(p: ConvexPolytope) -> float:
    """Divergence-theorem volume; raises InvalidPolytope on non-planar faces."""
    if p.is_empty:
        return 0.0
    for face in p.faces:
        pts = p.vertices[list(face)]
        n = _newell_normal(pts)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            continue
        dev = np.max(np.abs((pts - pts.mean(axis=0)) @ (n / norm)))
        if dev > PLANARITY_TOL:
            raise InvalidPolytope(f"face {face} is non-planar by {dev:.3g} m")
    vol = _signed_volume(p.vertices, p.faces)
    return vol if vol >= MIN_VOLUME else 0.0


def clip_polytope(p: ConvexPolytope, normal, offset) -> ConvexPolytope:
    """Intersect ``p`` with the half-space ``normal . x <= offset``.

    Vertices within ``CLIP_EPS`` of the plane count as lying on it. The cut
    is closed by a cap face whose outward normal is ``normal``.
    """
    if p.is_empty:
        return p
    n = np.asarray(normal, dtype=float)
    s = p.vertices @ n - offset
    outside = s > CLIP_EPS
    inside = s < -CLIP_EPS
    if not outside.any():
        return p
    if not inside.any():
        return ConvexPolytope.empty()

    new_vertices = []
    index_of = {}
    on_plane = []

    def keep(i):
        key = ("v", i)
        if key not in index_of:
            index_of[key] = len(new_vertices)
            new_vertices.append(p.vertices[i])
            if not inside[i]:
                on_plane.append(index_of[key])
        return index_of[key]

    def cut(i, j):
        key = ("e", min(i, j), max(i, j))
        if key not in index_of:
            t = s[i] / (s[i] - s[j])
            index_of[key] = len(new_vertices)
            new_vertices.append(p.vertices[i] + t * (p.vertices[j] - p.vertices[i]))
            on_plane.append(index_of[key])
        return index_of[key]

    faces = []
    for face in p.faces:
        loop = []
        for a, b in zip(face, face[1:] + face[:1]):
            if not outside[a]:
                loop.append(keep(a))
            if (inside[a] and outside[b]) or (outside[a] and inside[b]):
                loop.append(cut(a, b))
        # drop consecutive duplicates that arise at on-plane vertices
        loop = [v for k, v in enumerate(loop) if v != loop[k - 1]] if len(loop) > 1 else loop
        if len(set(loop)) >= 3:
            faces.append(tuple(loop))

    verts = np.array(new_vertices)
    cap = sorted(set(on_plane))
    if len(cap) >= 3:
        pts = verts[cap]
        centre = pts.mean(axis=0)
        u = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        rel = pts - centre
        angles = np.arctan2(rel @ w, rel @ u)
        faces.append(tuple(cap[k] for k in np.argsort(angles, kind="stable")))
    if len(faces) < 4:
        return ConvexPolytope.empty()
    return ConvexPolytope(verts, faces)


def intersection_volume(a: OrientedBox, b: OrientedBox) -> float:
    poly = a.as_polytope()
    for normal, offset in b.half_spaces():
        poly = clip_polytope(poly, normal, offset)
        if poly.is_empty:
            return 0.0
    return volume(poly)


def aabb_of_points(pts):
    """Axis-aligned bounds of ``pts`` as ``(center, extents)``; extents may be zero."""
    p = np.asarray(pts, dtype=float).reshape(-1, 3)
    if len(p) == 0:
        raise EmptyInput("cannot bound an empty point set")
    lo, hi = p.min(axis=0), p.max(axis=0)
    return (lo + hi) / 2.0, hi - lo


def aabb_iou(center_a, extents_a, center_b, extents_b) -> float:
    lo = np.maximum(center_a - extents_a / 2.0, center_b - extents_b / 2.0)
    hi = np.minimum(center_a + extents_a / 2.0, center_b + extents_b / 2.0)
    inter = float(np.prod(np.clip(hi - lo, 0.0, None)))
    union = float(np.prod(extents_a) + np.prod(extents_b)) - inter
    if union <= 0.0:
        same = np.array_equal(center_a, center_b) and np.array_equal(extents_a, extents_b)
        return 1.0 if same else 0.0
    return inter / union
