"""Shape annotation from posed depth frames.

The pipeline fills the annotated box with voxels, removes every voxel that
some frame observed as free space, turns the remainder into a triangle
mesh, relaxes it with Laplacian smoothing and finally fits a tight box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage, sparse

from . import _mc_table
from .errors import EmptyFrames, EmptyMesh, ResolutionTooCoarse, ValidationError
from .geometry import RigidTransform, transform_points
from .datasets.camera import CameraIntrinsics
from .sampling import TriMesh

DEFAULT_RESOLUTION = 0.002
DEFAULT_SMOOTH_ITERATIONS = 10
DEFAULT_SMOOTH_LAMBDA = 0.5
DEFAULT_ISO = 0.5
MIN_TRIANGLE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Dense occupancy over a box; voxel ``(i, j, k)`` is centred at ``origin + (idx + 0.5) * resolution``."""

    origin: np.ndarray
    resolution: float
    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool)
        if occ.ndim != 3 or min(occ.shape) < 1:
            raise ValidationError(f"occupancy must be a non-empty 3D array, got shape {occ.shape}")
        occ.setflags(write=False)
        origin = np.array(self.origin, dtype=float)
        origin.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self):
        return self.occupancy.shape

    def centers(self):
        idx = np.indices(self.dims).reshape(3, -1).T
        return self.origin + (idx + 0.5) * self.resolution


@dataclass(frozen=True, eq=False)
class AnnotatedFrame:
    """Depth in meters (0 = no measurement) and the annotated box pose in this camera."""

    depth: np.ndarray
    intrinsics: CameraIntrinsics
    box_pose: RigidTransform

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float)
        if d.shape != (self.intrinsics.height, self.intrinsics.width):
            raise ValidationError(
                f"depth shape {d.shape} does not match intrinsics "
                f"{self.intrinsics.height}x{self.intrinsics.width}"
            )


def _empty_grid(extents, resolution):
    e = np.asarray(extents, dtype=float)
    if resolution <= 0 or resolution > e.min():
        raise ResolutionTooCoarse(f"resolution {resolution} m must be in (0, {e.min()}]")
    dims = np.maximum(1, np.round(e / resolution).astype(int))
    origin = -dims * resolution / 2.0
    return origin, dims


def carve(extents, resolution: float, frames: Sequence[AnnotatedFrame],
          margin: Optional[float] = None) -> VoxelGrid:
    """Voxel carving inside a box of full size ``extents`` centred at the box origin.

    A voxel is freed by a frame when its centre projects inside the image
    onto a valid depth that lies beyond the centre's own depth by more than
    ``margin`` (default: one voxel).
    """
    if not frames:
        raise EmptyFrames("carving needs at least one frame")
    origin, dims = _empty_grid(extents, resolution)
    margin = resolution if margin is None else float(margin)
    idx = np.indices(dims).reshape(3, -1).T
    centers = origin + (idx + 0.5) * resolution
    occupied = np.ones(len(centers), dtype=bool)
    for frame in frames:
        intr = frame.intrinsics
        depth = np.asarray(frame.depth, dtype=float)
        rows, cols, z = intr.project(transform_points(frame.box_pose, centers))
        inside = (z > 0) & (rows >= 0) & (rows < intr.height) & (cols >= 0) & (cols < intr.width)
        measured = np.zeros(len(centers))
        measured[inside] = depth[rows[inside].astype(int), cols[inside].astype(int)]
        free = inside & (measured > 0) & (z + margin < measured)
        occupied &= ~free
    return VoxelGrid(origin, float(resolution), occupied.reshape(dims))


_CORNERS = np.array(_mc_table.CORNERS)
# per table edge: the corner with the smaller offset and the axis the edge runs along
_EDGE_BASE = np.array([
    _CORNERS[a] if _CORNERS[a].sum() < _CORNERS[b].sum() else _CORNERS[b] for a, b in _mc_table.EDGES
])
_EDGE_AXIS = np.array([int(np.flatnonzero(_CORNERS[a] != _CORNERS[b])[0]) for a, b in _mc_table.EDGES])


def smoothed_occupancy(grid: VoxelGrid):
    """Occupancy padded by one free voxel per side and box-filtered once (3x3x3)."""
    padded = np.pad(grid.occupancy.astype(float), 1)
    return ndimage.uniform_filter(padded, size=3, mode="constant", cval=0.0)


def marching_cubes(grid: VoxelGrid, iso: float = DEFAULT_ISO) -> TriMesh:
    """Iso-surface of the smoothed occupancy, in the grid's frame, outward wound.

    Vertices sit on cell edges, linearly interpolated between the two
    field samples; vertices on a shared edge are merged.
    """
    field = smoothed_occupancy(grid)
    shape = np.array(field.shape)
    below = field < iso
    n = shape - 1
    case = np.zeros(tuple(n), dtype=np.int32)
    for bit, (dx, dy, dz) in enumerate(_mc_table.CORNERS):
        case |= below[dx:dx + n[0], dy:dy + n[1], dz:dz + n[2]].astype(np.int32) << bit

    chunks = []
    for c in np.unique(case):
        edges = _mc_table.TRIANGLES[c]
        if not edges:
            continue
        cells = np.argwhere(case == c)
        # global edge key: linear index of the edge's lower corner * 3 + axis
        keys = np.stack([
            np.ravel_multi_index((cells + _EDGE_BASE[e]).T, tuple(shape)) * 3 + _EDGE_AXIS[e]
            for e in edges
        ], axis=1)
        chunks.append(keys.reshape(-1, 3))
    if not chunks:
        return TriMesh.empty()
    tris = np.concatenate(chunks)

    keys, inverse = np.unique(tris.ravel(), return_inverse=True)
    faces = inverse.reshape(-1, 3)
    lin, axis = keys // 3, keys % 3
    p0 = np.stack(np.unravel_index(lin, tuple(shape)), axis=1)
    p1 = p0.copy()
    p1[np.arange(len(p1)), axis] += 1
    f0 = field[tuple(p0.T)]
    f1 = field[tuple(p1.T)]
    t = (iso - f0) / (f1 - f0)
    pos = p0 + t[:, None] * (p1 - p0)
    # padded index i maps to voxel centre origin + (i - 1 + 0.5) * resolution
    vertices = grid.origin + (pos - 0.5) * grid.resolution

    a, b, cc = (vertices[faces[:, j]] for j in range(3))
    area = 0.5 * np.linalg.norm(np.cross(b - a, cc - a), axis=1)
    faces = faces[area > MIN_TRIANGLE_AREA]
    used, faces = np.unique(faces.ravel(), return_inverse=True)
    vertices, faces = vertices[used], faces.reshape(-1, 3)
    mesh = TriMesh(vertices, faces)
    if mesh.signed_volume() < 0:
        mesh = TriMesh(vertices, faces[:, ::-1])
    return mesh


def laplacian_smooth(mesh: TriMesh, iterations: int = DEFAULT_SMOOTH_ITERATIONS,
                     lam: float = DEFAULT_SMOOTH_LAMBDA) -> TriMesh:
    """Move every vertex ``lam`` of the way to its 1-ring mean, ``iterations`` times."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must be in (0, 1]")
    if iterations <= 0 or mesh.is_empty:
        return mesh
    f = mesh.triangles
    i = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 1], f[:, 2], f[:, 0]])
    j = np.concatenate([f[:, 1], f[:, 2], f[:, 0], f[:, 0], f[:, 1], f[:, 2]])
    nv = len(mesh.vertices)
    adj = sparse.coo_matrix((np.ones(len(i)), (i, j)), shape=(nv, nv)).tocsr()
    adj.data[:] = 1.0  # collapse duplicate edges
    deg = np.asarray(adj.sum(axis=1)).ravel()
    has = deg > 0
    v = mesh.vertices.copy()
    for _ in range(iterations):
        mean = adj @ v
        mean[has] /= deg[has, None]
        v[has] += lam * (mean[has] - v[has])
    return TriMesh(v, f)


def tight_box(mesh: TriMesh):
    """``(extents, recenter)``: vertex AABB size and the shift moving its centre to the origin."""
    if len(mesh.vertices) == 0 or mesh.is_empty:
        raise EmptyMesh("cannot fit a box to an empty mesh")
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    return hi - lo, RigidTransform(np.eye(3), -(lo + hi) / 2.0)


def annotate(extents, resolution: float, frames: Sequence[AnnotatedFrame],
             iterations: int = DEFAULT_SMOOTH_ITERATIONS, lam: float = DEFAULT_SMOOTH_LAMBDA,
             margin: Optional[float] = None, iso: float = DEFAULT_ISO):
    """Full carve, mesh, smooth, fit pipeline.

    Returns the mesh re-expressed in the recentred (canonical) frame, its
    tight extents, and ``recenter`` mapping box-frame points into that frame.
    """
    grid = carve(extents, resolution, frames, margin=margin)
    mesh = laplacian_smooth(marching_cubes(grid, iso), iterations, lam)
    ext, recenter = tight_box(mesh)
    return mesh.transformed(recenter), ext, recenter
