"""Exact nearest-neighbour search over 3D point sets."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyInput
from .sampling import as_points

LEAF_SIZE = 16


class NnIndex:
    """Immutable KD-tree over a point set (median splits, 16 points per leaf).

    Queries are exact. When several indexed points are equally close, the one
    with the lowest index is reported.
    """

    __slots__ = ("points", "_tree")

    def __init__(self, points):
        p = as_points(points).copy()
        if len(p) == 0:
            raise EmptyInput("cannot index an empty point set")
        p.setflags(write=False)
        self.points = p
        self._tree = cKDTree(p, leafsize=LEAF_SIZE, balanced_tree=True, compact_nodes=True)

    def __len__(self):
        return len(self.points)

    def query(self, queries):
        """Nearest neighbours for an ``(m, 3)`` array; returns ``(indices, distances)``."""
        q = np.asarray(queries, dtype=float).reshape(-1, 3)
        if len(q) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        if len(self.points) == 1:
            return np.zeros(len(q), dtype=np.int64), np.linalg.norm(q - self.points[0], axis=1)
        dist, idx = self._tree.query(q, k=2, eps=0.0)
        idx = idx[:, 0].astype(np.int64)
        tied = np.flatnonzero(dist[:, 1] == dist[:, 0])
        for i in tied:
            # more than two points may share the minimum; scan them all
            cands = self._tree.query_ball_point(q[i], dist[i, 0] * (1 + 1e-12) + 1e-300)
            cands = np.asarray(sorted(cands), dtype=np.int64)
            d = np.sqrt(np.sum((self.points[cands] - q[i]) ** 2, axis=1))
            idx[i] = cands[np.flatnonzero(d == d.min())[0]]
        return idx, dist[:, 0]

    def distances(self, queries):
        return self.query(queries)[1]


def build_index(pts) -> NnIndex:
    return NnIndex(pts)


def nearest(index: NnIndex, q):
    """``(point index, distance)`` of the closest indexed point to ``q``."""
    idx, dist = index.query(np.asarray(q, dtype=float).reshape(1, 3))
    return int(idx[0]), float(dist[0])
