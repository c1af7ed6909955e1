"""Bounded 3D Voronoi cells by iterative half-space clipping of the cuboid.

Each cell starts as the cuboid and is cut by the bisector planes of its
generator against neighbors in order of increasing distance. A neighbor at
distance ``d`` can only cut when ``d / 2`` is below the current maximum
distance from the generator to a cell vertex, so the sweep stops once that
bound is exceeded.

Every vertex remembers the set of plane labels it lies on. Neighbor planes
carry the neighbor's generator id (``>= 0``); cuboid faces carry negative
labels ``-1 .. -6`` for x=0, x=d1, y=0, y=d2, z=0, z=d3. Two vertices sharing
at least two labels span an edge of the convex cell, and a label held by three
or more vertices is a face. This keeps the combinatorics exact under
near-degenerate cuts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInput, InconsistentGeometry
from .points import Cuboid, PointPattern, check_distinct

BOUNDARY_LABELS = (-1, -2, -3, -4, -5, -6)


def boundary_plane(label: int, q: Cuboid) -> tuple[np.ndarray, float]:
    """Outward normal and offset of the cuboid face with the given label."""
    k = (-label - 1) // 2
    upper = (-label - 1) % 2 == 1
    n = np.zeros(3)
    n[k] = 1.0 if upper else -1.0
    return n, (q.extents[k] if upper else 0.0)


def default_eps(q: Cuboid) -> float:
    return 1e-9 * q.diameter


@dataclass
class VoronoiCell:
    generator_id: int
    generator: np.ndarray
    vertices: np.ndarray
    # vertex-index loops, counterclockwise seen from outside the cell
    faces: list[list[int]]
    # per face: neighbor generator id, or a negative cuboid-face label
    neighbors: list[int]

    @property
    def volume(self) -> float:
        g = self.generator
        vol = 0.0
        for loop in self.faces:
            a = self.vertices[loop[0]] - g
            for k in range(1, len(loop) - 1):
                b = self.vertices[loop[k]] - g
                c = self.vertices[loop[k + 1]] - g
                vol += np.dot(a, np.cross(b, c))
        return vol / 6.0


class _Polytope:
    """Convex polytope as vertices tagged with the planes they lie on."""

    def __init__(self, q: Cuboid):
        ext = q.extents
        pts, labels = [], []
        for sx in (0, 1):
            for sy in (0, 1):
                for sz in (0, 1):
                    pts.append([sx * ext[0], sy * ext[1], sz * ext[2]])
                    labels.append(frozenset((-1 - sx, -3 - sy, -5 - sz)))
        self.pts = np.array(pts, dtype=float)
        self.labels = labels

    def clip(self, normal: np.ndarray, offset: float, label: int, tol: float) -> bool:
        """Keep the part with ``normal . x <= offset``. Returns True if anything was cut."""
        d = self.pts @ normal - offset
        out = d > tol
        on = np.abs(d) <= tol
        for k in np.flatnonzero(on):
            self.labels[k] = self.labels[k] | {label}
        if not out.any():
            return False
        strict_in = np.flatnonzero(d < -tol)
        outside = np.flatnonzero(out)
        new_pts, new_labels = [], []
        for a in strict_in:
            la = self.labels[a]
            for b in outside:
                shared = la & self.labels[b]
                if len(shared) >= 2:
                    t = d[a] / (d[a] - d[b])
                    new_pts.append(self.pts[a] + t * (self.pts[b] - self.pts[a]))
                    new_labels.append(shared | {label})
        keep = np.flatnonzero(~out)
        labels = [self.labels[k] for k in keep] + new_labels
        pts = self.pts[keep]
        if new_pts:
            pts = np.vstack([pts, np.array(new_pts)])
        self.pts = pts
        self.labels = labels
        return True

    def faces(self, plane_of) -> tuple[list[list[int]], list[int]]:
        by_label: dict[int, list[int]] = {}
        for k, labs in enumerate(self.labels):
            for lab in labs:
                by_label.setdefault(lab, []).append(k)
        faces, neighbors = [], []
        for lab in sorted(by_label):
            idx = by_label[lab]
            if len(idx) < 3:
                continue
            normal = plane_of(lab)
            faces.append(_order_ccw(self.pts, idx, normal))
            neighbors.append(lab)
        return faces, neighbors


def _order_ccw(pts: np.ndarray, idx: list[int], normal: np.ndarray) -> list[int]:
    sub = pts[idx]
    c = sub.mean(axis=0)
    helper = np.eye(3)[int(np.argmin(np.abs(normal)))]
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    rel = sub - c
    ang = np.arctan2(rel @ v, rel @ u)
    return [idx[k] for k in np.argsort(ang, kind="stable")]


def _build_cell(i: int, pts: np.ndarray, q: Cuboid, tree: cKDTree, tol: float, k0: int) -> VoronoiCell:
    g = pts[i]
    poly = _Polytope(q)
    n = len(pts)
    processed = 1
    k = min(n, k0)
    done = n == 1
    while not done:
        dist, nbr = tree.query(g, k=k)
        dist, nbr = np.atleast_1d(dist), np.atleast_1d(nbr)
        radius = math.sqrt(float(np.max(np.sum((poly.pts - g) ** 2, axis=1))))
        for dj, j in zip(dist[processed:], nbr[processed:]):
            if dj > 2.0 * radius + tol:
                done = True
                break
            diff = pts[j] - g
            normal = diff / dj
            offset = float(normal @ (g + pts[j])) / 2.0
            if poly.clip(normal, offset, int(j), tol):
                radius = math.sqrt(float(np.max(np.sum((poly.pts - g) ** 2, axis=1))))
        else:
            processed = k
            if k >= n:
                done = True
            k = min(n, 2 * k)
        if len(poly.pts) < 4:
            raise InconsistentGeometry(f"cell {i} collapsed during clipping")

    def plane_of(label: int) -> np.ndarray:
        if label < 0:
            return boundary_plane(label, q)[0]
        diff = pts[label] - g
        return diff / np.linalg.norm(diff)

    faces, neighbors = poly.faces(plane_of)
    return VoronoiCell(i, g.copy(), poly.pts, faces, neighbors)


def build_bounded_voronoi(
    pattern: PointPattern | np.ndarray,
    q: Cuboid | None = None,
    *,
    eps: float | None = None,
    threads: int = 1,
) -> list[VoronoiCell]:
    """Voronoi cells of the generators, each intersected with the cuboid.

    Cells come back in generator order regardless of ``threads``.
    """
    if isinstance(pattern, PointPattern):
        pts = pattern.points
        q = q or pattern.cuboid
    else:
        pts = np.asarray(pattern, dtype=float).reshape(-1, 3)
    if q is None:
        raise ValueError("a cuboid is required for raw point arrays")
    if len(pts) < 1:
        raise DegenerateInput("at least one generator is required")
    eps = default_eps(q) if eps is None else eps
    check_distinct(pts, eps)
    tree = cKDTree(pts)

    def work(i):
        return _build_cell(i, pts, q, tree, eps, 32)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(len(pts))))
    return [work(i) for i in range(len(pts))]
