"""Voxel discretization of Voronoi diagrams and crack surfaces, plus crack shaping.

Voxel ``(p, q, r)`` is sampled at its center ``((p, q, r) + 0.5) * extent / dims``
in world units. With the default cuboid equal to ``dims`` one world unit is
one voxel.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import ConfigError, DimensionMismatch
from .points import Cuboid, sample_poisson

# one representative of each +/- pair of the 26 neighbor offsets
HALF_OFFSETS = [
    off for off in itertools.product((-1, 0, 1), repeat=3) if off > (0, 0, 0)
]


def voxel_centers(dims, q: Cuboid, x_slab: slice | None = None) -> np.ndarray:
    dims = tuple(int(d) for d in dims)
    axes = [(np.arange(n) + 0.5) * (e / n) for n, e in zip(dims, q.extents)]
    if x_slab is not None:
        axes[0] = axes[0][x_slab]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def rasterize_labels(generators, dims, q: Cuboid | None = None) -> np.ndarray:
    """Label each voxel with the id of the nearest generator (ties to the lowest id).

    ``generators`` may be a point array, a list of VoronoiCells or a complex.
    """
    pts = _generator_points(generators)
    dims = tuple(int(d) for d in dims)
    q = q or Cuboid(*map(float, dims))
    out = np.empty(dims, dtype=np.int32)
    if len(pts) == 0:
        raise ConfigError("cannot rasterize an empty diagram")
    if len(pts) == 1:
        out[:] = 0
        return out
    tree = cKDTree(pts)
    slab = max(1, 2_000_000 // max(1, dims[1] * dims[2]))
    for x0 in range(0, dims[0], slab):
        sl = slice(x0, min(dims[0], x0 + slab))
        c = voxel_centers(dims, q, sl)
        d, idx = tree.query(c, k=2)
        lab = idx[:, 0].copy()
        tie = d[:, 0] == d[:, 1]
        lab[tie] = np.minimum(idx[tie, 0], idx[tie, 1])
        out[sl] = lab.reshape((sl.stop - sl.start, dims[1], dims[2]))
    return out


def _generator_points(generators) -> np.ndarray:
    if hasattr(generators, "generators"):
        return np.asarray(generators.generators, dtype=float).reshape(-1, 3)
    if isinstance(generators, (list, tuple)) and generators and hasattr(generators[0], "generator"):
        return np.array([c.generator for c in generators], dtype=float).reshape(-1, 3)
    if hasattr(generators, "points"):
        return np.asarray(generators.points, dtype=float).reshape(-1, 3)
    return np.asarray(generators, dtype=float).reshape(-1, 3)


def _shifted_pairs(shape, off):
    """Slices selecting voxels v and v + off where both lie inside the grid."""
    src, dst = [], []
    for o, n in zip(off, shape):
        if o >= 0:
            src.append(slice(0, n - o))
            dst.append(slice(o, n))
        else:
            src.append(slice(-o, n))
            dst.append(slice(0, n + o))
    return tuple(src), tuple(dst)


def rasterize_surface(labels: np.ndarray, surface_pairs) -> np.ndarray:
    """Mark every voxel with a 26-neighbor across a surface facet.

    ``surface_pairs`` holds unordered pairs ``(j, k)`` of cell ids whose shared
    facet belongs to the surface. Voxel ``v`` is set when some 26-neighbor
    ``v'`` has ``{label(v), label(v')}`` in that set.
    """
    labels = np.asarray(labels)
    out = np.zeros(labels.shape, dtype=np.uint8)
    pairs = {(min(a, b), max(a, b)) for a, b in surface_pairs if a != b}
    if not pairs:
        return out
    n = int(max(labels.max(), max(max(p) for p in pairs))) + 1
    keys = np.array(sorted(a * n + b for a, b in pairs), dtype=np.int64)
    lab = labels.astype(np.int64)
    for off in HALF_OFFSETS:
        src, dst = _shifted_pairs(lab.shape, off)
        a, b = lab[src], lab[dst]
        key = np.minimum(a, b) * n + np.maximum(a, b)
        hit = (a != b) & np.isin(key, keys)
        out[src] |= hit
        out[dst] |= hit
    return out


def dilation_walk(d1: int, p: float, seed: int | None) -> np.ndarray:
    """Monotone Bernoulli(p) random walk over slices, starting at 0.

    Increment ``x`` is drawn from its own stream seeded by ``(seed, x)`` so any
    subset of slices can be evaluated independently.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError("dilation probability must lie in [0, 1]")
    base = 0 if seed is None else int(seed)
    steps = np.zeros(d1, dtype=np.int64)
    for x in range(1, d1):
        steps[x] = np.random.default_rng([base, x]).random() < p
    return np.cumsum(steps)


def dilate_slice_2x2(sl: np.ndarray, times: int) -> np.ndarray:
    """Dilate a 2D binary slice ``times`` times by the 2x2 element at offsets {0,1}^2."""
    out = sl.astype(bool, copy=True)
    for _ in range(int(times)):
        out[1:, :] |= out[:-1, :].copy()
        out[:, 1:] |= out[:, :-1].copy()
    return out


def adaptive_dilate(j: np.ndarray, p: float, seed: int | None = None) -> np.ndarray:
    walk = dilation_walk(j.shape[0], p, seed)
    out = np.array(j, dtype=np.uint8, copy=True)
    for x, w in enumerate(walk):
        if w:
            out[x] = dilate_slice_2x2(j[x], w)
    return out


def apply_microstructure(j: np.ndarray, fine_lambda: float, seed: int | None, q: Cuboid | None = None) -> np.ndarray:
    """Union of all cells of a fine Poisson-Voronoi diagram that meet the crack."""
    if fine_lambda <= 0:
        raise ConfigError("microstructure intensity must be positive")
    q = q or Cuboid(*map(float, j.shape))
    fine = sample_poisson(fine_lambda, q, seed)
    if len(fine) == 0 or not j.any():
        return np.array(j, dtype=np.uint8, copy=True)
    labels = rasterize_labels(fine.points, j.shape, q)
    hit = np.unique(labels[j.astype(bool)])
    return np.isin(labels, hit).astype(np.uint8)


def median_filter_binary(j: np.ndarray, radius: int = 1) -> np.ndarray:
    """Majority vote in a (2r+1)^3 window, zero padded beyond the borders."""
    if radius < 1:
        raise ConfigError("median radius must be at least 1")
    counts = j.astype(np.int32)
    ones = np.ones(2 * radius + 1, dtype=np.int32)
    for axis in range(3):
        counts = ndimage.correlate1d(counts, ones, axis=axis, mode="constant", cval=0)
    window = (2 * radius + 1) ** 3
    return (2 * counts > window).astype(np.uint8)


def union_branching(j1: np.ndarray, j2: np.ndarray) -> np.ndarray:
    if j1.shape != j2.shape:
        raise DimensionMismatch(f"volume shapes differ: {j1.shape} vs {j2.shape}")
    return (j1.astype(bool) | j2.astype(bool)).astype(np.uint8)
