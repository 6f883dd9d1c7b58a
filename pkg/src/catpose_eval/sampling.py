"""Area-weighted surface sampling and exact point-set diameters."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateMesh, TooFewPoints, ValidationError

DEFAULT_SAMPLES = 10_000
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh; ``vertices`` is ``(n, 3)`` float, ``triangles`` is ``(m, 3)`` int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        f = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValidationError("mesh has non-finite vertex coordinates")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValidationError("triangle index out of range")
        if len(f) and np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise ValidationError("triangle with repeated vertex index")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", f)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def is_empty(self):
        return len(self.triangles) == 0

    def triangle_areas(self):
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def signed_volume(self):
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def transformed(self, t):
        return TriMesh(self.vertices @ t.rotation.T + t.translation, self.triangles)


def as_points(pts) -> np.ndarray:
    """Validate and return an ``(n, 3)`` float array (a point set)."""
    p = np.asarray(pts, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(p)):
        raise ValidationError("point set has non-finite coordinates")
    return p


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit per-item seed: ``seed`` XOR the first 8 bytes of blake2b(key)."""
    h = int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    return (int(seed) ^ h) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 (XSL-RR 128/64) seeded directly with the 64-bit value."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def sample_surface(mesh: TriMesh, n: int = DEFAULT_SAMPLES, seed: int = 0) -> np.ndarray:
    """Draw ``n`` points uniformly over the surface of ``mesh``.

    A triangle is picked through the inverse CDF of cumulative area, then a
    point inside it from two uniforms ``u, v`` with barycentric weights
    ``(1 - sqrt(u), sqrt(u) (1 - v), sqrt(u) v)``. The stream is consumed in
    that order, so output is a pure function of ``(mesh, n, seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    areas = mesh.triangle_areas() if len(mesh.triangles) else np.zeros(0)
    total = float(areas.sum())
    if not total > 0.0:
        raise DegenerateMesh("mesh has zero total surface area")
    cum = np.cumsum(areas)
    rng = make_rng(seed)
    pick = rng.random(n) * cum[-1]
    u = rng.random(n)
    v = rng.random(n)
    idx = np.minimum(np.searchsorted(cum, pick, side="right"), len(cum) - 1)
    tri = mesh.triangles[idx]
    a, b, c = (mesh.vertices[tri[:, k]] for k in range(3))
    su = np.sqrt(u)[:, None]
    return (1.0 - su) * a + su * (1.0 - v[:, None]) * b + su * v[:, None] * c


def _max_pairwise(p, chunk=2048):
    best = 0.0
    for start in range(0, len(p), chunk):
        block = p[start:start + chunk]
        d = np.sqrt(np.sum((block[:, None, :] - p[None, :, :]) ** 2, axis=-1))
        best = max(best, float(d.max()))
    return best


def diameter(pts) -> float:
    """Largest pairwise distance, computed exhaustively over convex-hull vertices."""
    p = as_points(pts)
    if len(p) < 2:
        raise TooFewPoints("diameter needs at least two points")
    try:
        hull = p[ConvexHull(p).vertices]
    except (QhullError, ValueError):
        # coplanar / collinear input: fall back to all pairs
        hull = p
    return _max_pairwise(hull)
