"""Reference implementations used only by the tests.

Each oracle is written independently of the package code it checks: plain
loops, exhaustive enumeration or a different library routine.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from vorocrack.paths import Cycle


@dataclass
class ArcGraph:
    """Just enough of a complex for the path routines: vertices, arcs, weights."""

    arcs: np.ndarray
    arc_weights: np.ndarray
    n_vertices: int

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


def random_graph(rng: np.random.Generator, n: int, extra: float = 0.15, integer: bool = False) -> ArcGraph:
    """Connected random graph: a random spanning tree plus extra edges."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    for a, b in itertools.combinations(range(n), 2):
        if rng.random() < extra:
            edges.add((a, b))
    arcs = np.array(sorted(edges), dtype=np.int64)
    # random stored direction
    flip = rng.random(len(arcs)) < 0.5
    arcs[flip] = arcs[flip][:, ::-1]
    if integer:
        w = rng.integers(1, 10, len(arcs)).astype(float)
    else:
        w = rng.uniform(0.1, 5.0, len(arcs))
    return ArcGraph(arcs, w, n)


def all_simple_path_weights(g: ArcGraph, s: int, t: int) -> list[float]:
    adj = [[] for _ in range(g.n_vertices)]
    for (a, b), w in zip(g.arcs, g.arc_weights):
        adj[a].append((b, w))
        adj[b].append((a, w))
    out = []

    def walk(v, seen, total):
        if v == t:
            out.append(total)
            return
        for w_, c in adj[v]:
            if w_ not in seen:
                seen.add(w_)
                walk(w_, seen, total + c)
                seen.remove(w_)

    walk(s, {s}, 0.0)
    return out


def brute_force_binary(costs, matrix, rhs) -> float | None:
    """Minimum of costs @ x over all x in {0,1}^n with matrix @ x == rhs."""
    m = np.asarray(matrix.todense() if hasattr(matrix, "todense") else matrix, dtype=np.int64)
    n = m.shape[1]
    costs = np.asarray(costs, dtype=float)
    best = None
    for start in range(0, 2**n, 1 << 14):
        idx = np.arange(start, min(2**n, start + (1 << 14)), dtype=np.int64)
        x = (idx[:, None] >> np.arange(n)) & 1
        ok = np.all(x @ m.T == np.asarray(rhs)[None, :], axis=1)
        if ok.any():
            val = float((x[ok] @ costs).min())
            best = val if best is None else min(best, val)
    return best


def ring_cycle(k, ring: list[int]) -> Cycle:
    """Cycle through the given vertex ring, looking up the connecting arcs."""
    lookup = {}
    for a, (t, h) in enumerate(k.arcs):
        lookup[(int(t), int(h))] = (a, 1)
        lookup[(int(h), int(t))] = (a, -1)
    arcs, signs = [], []
    for i, v in enumerate(ring):
        a, s = lookup[(v, ring[(i + 1) % len(ring)])]
        arcs.append(a)
        signs.append(s)
    return Cycle(list(ring), arcs, signs)


def facet_loop_vertices(k, f: int) -> list[int]:
    """Vertex ring of facet ``f`` in stored orientation, from its signed arcs."""
    out = []
    for a, s in zip(k.facet_arcs[f], k.facet_signs[f]):
        t, h = k.arcs[a]
        out.append(int(t) if s > 0 else int(h))
    return out


def exhaustive_min_surface(k, q: np.ndarray) -> float | None:
    """Minimum weight over every signed facet chain y in {-1,0,1}^F with D y = q.

    Depth-first over facets; a branch is abandoned once an arc whose facets are
    all decided misses its target, or its weight already exceeds the best.
    Every feasible chain is reachable, so the result is the exact minimum.
    """
    nf = k.n_facets
    rows = [dict() for _ in range(nf)]
    for f in range(nf):
        for a, s in zip(k.facet_arcs[f], k.facet_signs[f]):
            rows[f][int(a)] = rows[f].get(int(a), 0) + int(s)
    last = {}
    for f in range(nf):
        for a in rows[f]:
            last[a] = f
    closing = [[] for _ in range(nf)]
    for a, f in last.items():
        closing[f].append(a)
    target = np.asarray(q, dtype=np.int64)
    untouched = [a for a in range(k.n_arcs) if a not in last]
    if any(target[a] != 0 for a in untouched):
        return None
    w = np.asarray(k.facet_weights, dtype=float)
    acc = np.zeros(k.n_arcs, dtype=np.int64)
    best = [np.inf]

    def rec(f, total):
        if total >= best[0]:
            return
        if f == nf:
            best[0] = total
            return
        for y in (0, 1, -1):
            for a, c in rows[f].items():
                acc[a] += y * c
            if all(acc[a] == target[a] for a in closing[f]):
                rec(f + 1, total + (w[f] if y else 0.0))
            for a, c in rows[f].items():
                acc[a] -= y * c

    rec(0, 0.0)
    return None if not np.isfinite(best[0]) else float(best[0])


def naive_surface_raster(labels: np.ndarray, pairs) -> np.ndarray:
    """Direct evaluation of the 26-neighbor rule with explicit loops."""
    pairs = {(min(a, b), max(a, b)) for a, b in pairs}
    d1, d2, d3 = labels.shape
    out = np.zeros(labels.shape, dtype=np.uint8)
    offs = [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]
    for x in range(d1):
        for y in range(d2):
            for z in range(d3):
                a = int(labels[x, y, z])
                for dx, dy, dz in offs:
                    u, v, w = x + dx, y + dy, z + dz
                    if 0 <= u < d1 and 0 <= v < d2 and 0 <= w < d3:
                        b = int(labels[u, v, w])
                        if (min(a, b), max(a, b)) in pairs and a != b:
                            out[x, y, z] = 1
                            break
    return out


def dilation_surface_raster(labels: np.ndarray, pairs) -> np.ndarray:
    """Same rule via binary dilation: label j next to a label-k voxel, for each pair."""
    out = np.zeros(labels.shape, dtype=bool)
    ball = np.ones((3, 3, 3), dtype=bool)
    for a, b in pairs:
        if a == b:
            continue
        ma, mb = labels == a, labels == b
        out |= ma & ndimage.binary_dilation(mb, ball)
        out |= mb & ndimage.binary_dilation(ma, ball)
    return out.astype(np.uint8)


def naive_median(j: np.ndarray, r: int) -> np.ndarray:
    d1, d2, d3 = j.shape
    out = np.zeros_like(j, dtype=np.uint8)
    window = (2 * r + 1) ** 3
    for x in range(d1):
        for y in range(d2):
            for z in range(d3):
                block = j[max(0, x - r):x + r + 1, max(0, y - r):y + r + 1, max(0, z - r):z + r + 1]
                out[x, y, z] = 1 if 2 * int(block.sum()) > window else 0
    return out


def ripley_k(points: np.ndarray, t: float, volume: float = 1.0) -> float:
    """Ripley's K with translation edge correction on the unit cube."""
    n = len(points)
    if n < 2:
        return 0.0
    diff = points[:, None, :] - points[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, np.inf)
    weight = np.prod(1.0 - np.abs(diff), axis=2)
    close = dist <= t
    lam2 = n * (n - 1) / volume**2
    return float((1.0 / weight[close]).sum() / lam2 / volume)
