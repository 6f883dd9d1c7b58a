"""Pinhole intrinsics, projection and synthetic depth rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..geometry import RigidTransform, transform_points


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera; pixel ``(row, col)`` has its centre at image coordinate ``(col, row)``."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_scale: float = 0.001

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValidationError("principal point outside the image")
        if not self.depth_scale > 0:
            raise ValidationError("depth_scale must be positive")

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                       int(d["width"]), int(d["height"]), float(d.get("depth_scale", 0.001)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad camera intrinsics: {exc}") from exc

    def as_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height, "depth_scale": self.depth_scale}

    def projection_matrix(self):
        """The 3x4 matrix ``K [I | 0]``."""
        return np.array([[self.fx, 0.0, self.cx, 0.0],
                         [0.0, self.fy, self.cy, 0.0],
                         [0.0, 0.0, 1.0, 0.0]])

    def project(self, pts_cam):
        """Nearest pixel ``(rows, cols)`` and depth ``z`` for camera-frame points."""
        p = np.asarray(pts_cam, dtype=float).reshape(-1, 3)
        z = p[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * p[:, 0] / z + self.cx
            v = self.fy * p[:, 1] / z + self.cy
        cols = np.floor(u + 0.5)
        rows = np.floor(v + 0.5)
        return rows, cols, z

    def pixel_rays(self):
        """Unnormalised ray directions ``(H, W, 3)`` with unit z through pixel centres."""
        cols, rows = np.meshgrid(np.arange(self.width, dtype=float), np.arange(self.height, dtype=float))
        return np.stack([(cols - self.cx) / self.fx, (rows - self.cy) / self.fy,
                         np.ones_like(cols)], axis=-1)


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> RigidTransform:
    """Camera pose in the world (camera looks along +z, image rows grow along +y)."""
    eye, target, up = (np.asarray(x, dtype=float) for x in (eye, target, up))
    z = target - eye
    z /= np.linalg.norm(z)
    if abs(z @ up) > 0.99:
        up = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    x = np.cross(-up, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return RigidTransform(np.stack([x, y, z], axis=1), eye)


def render_sphere_depth(intr: CameraIntrinsics, center_cam, radius, far=0.0):
    """Exact z-depth image of a sphere; pixels that miss it get ``far`` (0 means missing)."""
    d = intr.pixel_rays()
    c = np.asarray(center_cam, dtype=float)
    a = np.einsum("hwk,hwk->hw", d, d)
    b = -2.0 * (d @ c)
    cc = c @ c - radius * radius
    disc = b * b - 4.0 * a * cc
    hit = disc >= 0
    s = np.where(hit, (-b - np.sqrt(np.where(hit, disc, 0.0))) / (2.0 * a), 0.0)
    hit &= s > 0
    return np.where(hit, s, far)


def render_mesh_depth(intr: CameraIntrinsics, mesh, cam_from_mesh: RigidTransform, far=0.0):
    """Z-buffer a triangle mesh by casting a ray through every pixel centre."""
    v = transform_points(cam_from_mesh, mesh.vertices)
    tri = v[mesh.triangles]
    rays = intr.pixel_rays().reshape(-1, 3)
    depth = np.full(len(rays), np.inf)
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    for k in range(len(tri)):
        # Moller-Trumbore against all pixel rays from the origin
        pvec = np.cross(rays, e2[k])
        det = pvec @ e1[k]
        ok = np.abs(det) > 1e-15
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = -tri[k, 0]
        u = (pvec @ tvec) * inv
        qvec = np.cross(tvec, e1[k])
        w = (rays @ qvec) * inv
        s = (qvec @ e2[k]) * inv
        hit = ok & (u >= 0) & (w >= 0) & (u + w <= 1) & (s > 0)
        depth = np.where(hit & (s < depth), s, depth)
    depth = np.where(np.isfinite(depth), depth, far)
    return depth.reshape(intr.height, intr.width)

