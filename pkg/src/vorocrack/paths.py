"""Shortest paths on the arc graph of a complex, and boundary cycles.

Arcs are stored directed but traversed in both directions; the stored
direction only fixes the sign bookkeeping (``+1`` when a path walks an arc
from tail to head).
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import sparse

from .complex import CellComplex
from .errors import ConfigError, DegenerateCycle, InvalidCycle, Unreachable
from .ipsolve import BinaryProgram
from .points import Cuboid

ArcFilter = Callable[[int], bool] | np.ndarray | None


@dataclass
class GraphPath:
    vertices: list[int]
    arcs: list[int]
    signs: list[int]
    weight: float


@dataclass
class Cycle:
    """Closed arc chain. ``vertices[i]`` is the tail of step ``i`` along the traversal."""

    vertices: list[int]
    arcs: list[int]
    signs: list[int]
    anchors: list[int] | None = None

    def q_vector(self, n_arcs: int) -> np.ndarray:
        q = np.zeros(n_arcs, dtype=np.int64)
        q[np.asarray(self.arcs, dtype=np.int64)] = self.signs
        return q

    def reversed(self) -> "Cycle":
        n = len(self.arcs)
        verts = [self.vertices[(n - i) % n] for i in range(n)]
        arcs = self.arcs[::-1]
        signs = [-s for s in self.signs[::-1]]
        return Cycle(verts, arcs, signs, self.anchors)

    def to_json(self) -> dict:
        return {"vertices": list(map(int, self.vertices)), "arcs": list(map(int, self.arcs)),
                "signs": list(map(int, self.signs)), "anchors": self.anchors}

    @classmethod
    def from_json(cls, d: dict) -> "Cycle":
        return cls(d["vertices"], d["arcs"], d["signs"], d.get("anchors"))


def _mask(k: CellComplex, arc_filter: ArcFilter) -> np.ndarray:
    if arc_filter is None:
        return np.ones(k.n_arcs, dtype=bool)
    if callable(arc_filter):
        return np.array([bool(arc_filter(a)) for a in range(k.n_arcs)], dtype=bool)
    return np.asarray(arc_filter, dtype=bool)


def _adjacency(k: CellComplex, mask: np.ndarray) -> list[list[tuple[int, int, float]]]:
    adj: list[list[tuple[int, int, float]]] = [[] for _ in range(k.n_vertices)]
    for a in np.flatnonzero(mask):
        t, h = int(k.arcs[a, 0]), int(k.arcs[a, 1])
        w = float(k.arc_weights[a])
        adj[t].append((h, int(a), w))
        adj[h].append((t, int(a), w))
    for lst in adj:
        lst.sort()
    return adj


def _distances(adj, source: int) -> np.ndarray:
    dist = np.full(len(adj), math.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, _, c in adj[v]:
            nd = d + c
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def dijkstra(k: CellComplex, s: int, t: int, arc_filter: ArcFilter = None) -> GraphPath:
    """Minimum-weight s-t path over arcs passing ``arc_filter``.

    Among equally short paths the lexicographically smallest vertex sequence is
    returned: distances to ``t`` are computed first, then the path is grown from
    ``s`` taking the smallest-id neighbor that stays on a shortest path.
    """
    if s == t:
        raise ConfigError("start and end vertex must differ")
    mask = _mask(k, arc_filter)
    if np.any(k.arc_weights[mask] <= 0):
        raise ConfigError("arc weights must be strictly positive")
    adj = _adjacency(k, mask)
    to_t = _distances(adj, t)
    if not math.isfinite(to_t[s]):
        raise Unreachable(f"vertex {t} is unreachable from {s}")
    verts, arcs, signs = [s], [], []
    v = s
    total = 0.0
    while v != t:
        tol = 1e-12 * max(1.0, to_t[v])
        for w, a, c in adj[v]:
            if abs(c + to_t[w] - to_t[v]) <= tol and to_t[w] < to_t[v]:
                break
        else:
            raise RuntimeError("shortest-path reconstruction failed")
        verts.append(w)
        arcs.append(a)
        signs.append(1 if k.arcs[a, 0] == v else -1)
        total += c
        v = w
    return GraphPath(verts, arcs, signs, total)


def spp_as_ip(k: CellComplex, s: int, t: int, arc_filter: ArcFilter = None) -> BinaryProgram:
    """Vertex-arc incidence program with one variable per arc direction.

    Variable ``2a`` walks arc ``a`` tail->head, ``2a+1`` head->tail. Row ``v``
    is +1 where the variable leaves ``v`` and -1 where it enters; the
    right-hand side is +1 at ``s`` and -1 at ``t``.
    """
    mask = _mask(k, arc_filter)
    sel = np.flatnonzero(mask)
    tails, heads = k.arcs[sel, 0], k.arcs[sel, 1]
    n = 2 * len(sel)
    cols = np.arange(n)
    rows = np.concatenate([np.column_stack([tails, heads]).ravel(), np.column_stack([heads, tails]).ravel()])
    cols2 = np.concatenate([cols, cols])
    vals = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    mat = sparse.csr_matrix((vals, (rows, cols2)), shape=(k.n_vertices, n), dtype=np.int64)
    rhs = np.zeros(k.n_vertices, dtype=np.int64)
    rhs[s] += 1
    rhs[t] -= 1
    costs = np.repeat(k.arc_weights[sel], 2)
    names = [f"a{a}{d}" for a in sel for d in ("f", "r")]
    return BinaryProgram(costs, mat, rhs, names)


def spp_solution_arcs(k: CellComplex, prog_x: np.ndarray, arc_filter: ArcFilter = None) -> list[int]:
    sel = np.flatnonzero(_mask(k, arc_filter))
    used = np.asarray(prog_x).reshape(-1, 2).sum(axis=1) > 0
    return [int(a) for a in sel[used]]


VERTICAL_EDGE_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))


def vertical_edge_vertices(k: CellComplex, edge: int, tol: float | None = None) -> np.ndarray:
    """Vertex ids lying on vertical edge ``edge`` of the cuboid (0..3 around the perimeter)."""
    q = k.cuboid
    tol = 10 * k.eps if tol is None else tol
    cx, cy = VERTICAL_EDGE_CORNERS[edge]
    x0, y0 = cx * q.d1, cy * q.d2
    v = k.vertices
    return np.flatnonzero((np.abs(v[:, 0] - x0) <= tol) & (np.abs(v[:, 1] - y0) <= tol))


def choose_anchor(k: CellComplex, edge: int, height: float) -> int:
    cand = vertical_edge_vertices(k, edge)
    if len(cand) == 0:
        raise Unreachable(f"no complex vertex on vertical edge {edge}")
    z = k.vertices[cand, 2]
    gap = np.abs(z - height * k.cuboid.d3)
    order = np.lexsort((cand, gap))
    return int(cand[order[0]])


def excise_loops(
    vertices: list[int], arcs: list[int], signs: list[int], arc_ends: np.ndarray | None = None
) -> tuple[list[int], list[int], list[int]]:
    """Reduce a closed walk to a simple cycle by cutting out revisits.

    ``vertices[i]`` is the tail of step ``i``; the walk closes back to
    ``vertices[0]``. Segments walked out and back cancel in the signed arc
    sum; what remains is traversed from the earliest walk vertex still on it.
    Raises ``DegenerateCycle`` if the remainder is not one simple cycle.
    """
    n = len(arcs)
    if arc_ends is None:
        ends = {}
        for i, (a, s) in enumerate(zip(arcs, signs)):
            u, v = vertices[i], vertices[(i + 1) % n]
            ends[a] = (u, v) if s > 0 else (v, u)
    else:
        ends = {a: (int(arc_ends[a, 0]), int(arc_ends[a, 1])) for a in arcs}
    chain: dict[int, int] = {}
    for a, s in zip(arcs, signs):
        chain[a] = chain.get(a, 0) + int(s)
    kept = {a: c for a, c in chain.items() if c != 0}
    if any(abs(c) != 1 for c in kept.values()):
        raise DegenerateCycle("walk traverses an arc twice in the same direction")
    out: dict[int, tuple[int, int, int]] = {}
    for a, c in kept.items():
        t, h = ends[a] if c > 0 else ends[a][::-1]
        if t in out:
            raise DegenerateCycle("remaining walk is not a simple cycle")
        out[t] = (a, c, h)
    if not out:
        return [], [], []
    start = next(v for v in vertices if v in out)
    vs, as_, ss = [], [], []
    v = start
    while True:
        a, c, h = out[v]
        vs.append(v)
        as_.append(a)
        ss.append(c)
        v = h
        if v == start:
            break
        if v not in out or len(vs) > len(out):
            raise DegenerateCycle("remaining walk is not a simple cycle")
    if len(vs) != len(out):
        raise DegenerateCycle("remaining walk splits into several cycles")
    return vs, as_, ss


def validate_cycle(k: CellComplex, h: Cycle) -> None:
    n = len(h.arcs)
    if n < 3 or len(h.vertices) != n or len(h.signs) != n:
        raise InvalidCycle("a cycle needs at least three arcs")
    if len(set(h.vertices)) != n or len(set(h.arcs)) != n:
        raise InvalidCycle("cycle is not simple")
    for i, (a, s) in enumerate(zip(h.arcs, h.signs)):
        tail, head = (k.arcs[a, 0], k.arcs[a, 1]) if s > 0 else (k.arcs[a, 1], k.arcs[a, 0])
        if tail != h.vertices[i] or head != h.vertices[(i + 1) % n]:
            raise InvalidCycle(f"step {i} of the cycle does not follow arc {a}")


def boundary_cycle(k: CellComplex, heights=(0.5, 0.5, 0.5, 0.5), q: Cuboid | None = None) -> Cycle:
    """Cycle through one vertex on each vertical cuboid edge, using boundary arcs only.

    Anchors are the vertices nearest to the requested relative heights. The
    four shortest paths u1->u2->u3->u4->u1 are concatenated and any detours
    where they overlap are cut out.
    """
    if len(heights) != 4:
        raise ConfigError("four edge heights are required")
    anchors = [choose_anchor(k, e, h) for e, h in enumerate(heights)]
    if len(set(anchors)) < 4:
        raise DegenerateCycle("two anchor vertices coincide")
    mask = k.boundary_arc_mask()
    verts, arcs, signs = [], [], []
    for i in range(4):
        p = dijkstra(k, anchors[i], anchors[(i + 1) % 4], mask)
        verts.extend(p.vertices[:-1])
        arcs.extend(p.arcs)
        signs.extend(p.signs)
    v, a, s = excise_loops(verts, arcs, signs, k.arcs)
    h = Cycle(v, a, s, anchors)
    try:
        validate_cycle(k, h)
    except InvalidCycle as exc:
        raise DegenerateCycle(f"boundary paths do not form a simple cycle: {exc}") from None
    return h


def cycle_weight(k: CellComplex, h: Cycle) -> float:
    return float(sum(k.arc_weights[a] for a in h.arcs))


def save_cycle(h: Cycle, path: str | Path) -> None:
    Path(path).write_text(json.dumps(h.to_json(), indent=2) + "\n")


def load_cycle(path: str | Path) -> Cycle:
    return Cycle.from_json(json.loads(Path(path).read_text()))
