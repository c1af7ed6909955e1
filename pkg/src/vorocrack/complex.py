"""Cellular complex of a bounded Voronoi diagram.

Storage conventions:

* Vertex ids are assigned in lexicographic order of position.
* Each undirected edge becomes one arc directed from the smaller to the larger
  vertex id.
* A facet is a closed loop of ``(arc, sign)`` pairs. ``sign = +1`` means the
  loop runs along the arc's stored direction (coherent), ``-1`` against it.
  The stored loop runs counterclockwise as seen from inside the incident cell
  with the smaller generator id (boundary facets: from inside the cuboid), so
  its right-hand normal points into that cell.
* ``facet_cells[f] = (a, b)`` with ``a < b`` for interior facets, and
  ``(a, label)`` with a negative cuboid-face label for boundary facets.
* ``cell_facets[c]`` and ``cell_sides[c]``: side ``+1`` when the facet's stored
  orientation is outward for cell ``c``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ConfigError, InconsistentGeometry, ZeroWeight
from .points import Cuboid
from .voronoi import VoronoiCell, default_eps

log = logging.getLogger(__name__)


@dataclass
class CellComplex:
    vertices: np.ndarray
    arcs: np.ndarray
    facet_arcs: list[np.ndarray]
    facet_signs: list[np.ndarray]
    facet_cells: np.ndarray
    cell_facets: list[np.ndarray]
    cell_sides: list[np.ndarray]
    generators: np.ndarray
    cuboid: Cuboid
    arc_weights: np.ndarray = None
    facet_weights: np.ndarray = None
    eps: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.arc_weights is None:
            self.arc_weights = np.ones(len(self.arcs))
        if self.facet_weights is None:
            self.facet_weights = np.ones(len(self.facet_arcs))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @property
    def n_facets(self) -> int:
        return len(self.facet_arcs)

    @property
    def n_cells(self) -> int:
        return len(self.cell_facets)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_arcs + self.n_facets - self.n_cells

    @property
    def facet_on_boundary(self) -> np.ndarray:
        return self.facet_cells[:, 1] < 0

    def near_face_facets(self) -> np.ndarray:
        """Interior facets lying within ``eps`` of a cuboid face plane."""
        ext = self.cuboid.extents
        out = []
        for f in np.flatnonzero(~self.facet_on_boundary):
            p = self.vertices[self.facet_vertices(int(f))]
            if any(np.all(np.abs(p[:, ax] - side) <= self.eps) for ax in range(3) for side in (0.0, ext[ax])):
                out.append(int(f))
        return np.array(out, dtype=np.int64)

    def facet_vertices(self, f: int) -> np.ndarray:
        """Vertex loop of facet ``f`` in stored orientation."""
        a, s = self.facet_arcs[f], self.facet_signs[f]
        return np.where(s > 0, self.arcs[a, 0], self.arcs[a, 1])

    def incidence(self) -> sparse.csc_matrix:
        """Arc-facet incidence matrix D (arcs x facets, entries are coherence signs)."""
        if "D" not in self._cache:
            rows = np.concatenate(self.facet_arcs) if self.n_facets else np.empty(0, int)
            cols = np.repeat(np.arange(self.n_facets), [len(a) for a in self.facet_arcs])
            vals = np.concatenate(self.facet_signs) if self.n_facets else np.empty(0, int)
            self._cache["D"] = sparse.csc_matrix(
                (vals.astype(np.int64), (rows, cols)), shape=(self.n_arcs, self.n_facets)
            )
        return self._cache["D"]

    def boundary_arc_mask(self) -> np.ndarray:
        """Arcs lying on the surface of the cuboid (edges of boundary facets)."""
        if "barc" not in self._cache:
            mask = np.zeros(self.n_arcs, dtype=bool)
            for f in np.flatnonzero(self.facet_on_boundary):
                mask[self.facet_arcs[f]] = True
            self._cache["barc"] = mask
        return self._cache["barc"]

    def arc_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(v[self.arcs[:, 1]] - v[self.arcs[:, 0]], axis=1)

    def facet_area(self, f: int) -> float:
        loop = self.vertices[self.facet_vertices(f)]
        c = loop.mean(axis=0)
        rel = loop - c
        cross = np.cross(rel, np.roll(rel, -1, axis=0))
        return float(np.linalg.norm(cross.sum(axis=0))) / 2.0

    def facet_areas(self) -> np.ndarray:
        return np.array([self.facet_area(f) for f in range(self.n_facets)])

    def facet_normal(self, f: int) -> np.ndarray:
        loop = self.vertices[self.facet_vertices(f)]
        rel = loop - loop.mean(axis=0)
        n = np.cross(rel, np.roll(rel, -1, axis=0)).sum(axis=0)
        return n / np.linalg.norm(n)


def _merge_vertices(all_pts: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Cluster points closer than ``eps``; returns canonical ids and positions."""
    pairs = cKDTree(all_pts).query_pairs(eps, output_type="ndarray")
    n = len(all_pts)
    graph = sparse.coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    n_comp, comp = connected_components(graph, directed=False)
    first = np.full(n_comp, -1)
    for k in range(n - 1, -1, -1):
        first[comp[k]] = k
    rep = all_pts[first]
    order = np.lexsort((rep[:, 2], rep[:, 1], rep[:, 0]))
    rank = np.empty(n_comp, dtype=np.int64)
    rank[order] = np.arange(n_comp)
    return rank[comp], rep[order]


def _canonical_loop(loop: list[int]) -> tuple[int, ...]:
    k = loop.index(min(loop))
    return tuple(loop[k:] + loop[:k])


def extract_complex(cells: list[VoronoiCell], q: Cuboid, eps: float | None = None) -> CellComplex:
    """Merge per-cell polytopes into one cellular complex.

    Raises InconsistentGeometry when neighboring cells disagree about a shared
    facet or the Euler relation fails; both indicate an ``eps`` ill-suited to
    the input scale.
    """
    eps = default_eps(q) if eps is None else eps
    offsets = np.cumsum([0] + [len(c.vertices) for c in cells])
    all_pts = np.vstack([c.vertices for c in cells])
    gid, positions = _merge_vertices(all_pts, eps)

    facets: dict[tuple[int, int], tuple[int, ...]] = {}
    seen_from: dict[tuple[int, int], list] = {}
    for c, cell in zip(cells, offsets[:-1]):
        i = c.generator_id
        for loop, nb in zip(c.faces, c.neighbors):
            glob = [int(gid[cell + k]) for k in loop]
            dedup = [v for k, v in enumerate(glob) if v != glob[k - 1]] if len(glob) > 1 else glob
            if len(dedup) >= 3 and len(set(dedup)) != len(dedup):
                raise InconsistentGeometry(f"facet of cell {i} toward {nb} self-intersects after merging")
            key = (min(i, nb), max(i, nb)) if nb >= 0 else (i, nb)
            seen_from.setdefault(key, []).append((i, dedup))
    for key, views in seen_from.items():
        a, b = key
        interior = b >= 0
        live = [(i, loop) for i, loop in views if len(loop) >= 3]
        if interior:
            if len(live) == 0:
                continue
            if len(views) != 2 or len(live) != 2 or set(live[0][1]) != set(live[1][1]):
                raise InconsistentGeometry(f"cells {a} and {b} disagree about their shared facet")
        elif not live:
            continue
        owner_loop = next(loop for i, loop in live if i == a)
        # outward-CCW for the owner reversed: CCW seen from inside the owner
        facets[key] = _canonical_loop(owner_loop[::-1])

    keys = sorted(facets)
    edges: dict[tuple[int, int], int] = {}
    for key in keys:
        loop = facets[key]
        for k in range(len(loop)):
            u, v = loop[k], loop[(k + 1) % len(loop)]
            edges.setdefault((min(u, v), max(u, v)), 0)
    arc_list = sorted(edges)
    for idx, e in enumerate(arc_list):
        edges[e] = idx
    arcs = np.array(arc_list, dtype=np.int64).reshape(-1, 2)

    facet_arcs, facet_signs, facet_cells = [], [], []
    cell_f: list[list[int]] = [[] for _ in cells]
    cell_s: list[list[int]] = [[] for _ in cells]
    for f, key in enumerate(keys):
        loop = facets[key]
        fa, fs = [], []
        for k in range(len(loop)):
            u, v = loop[k], loop[(k + 1) % len(loop)]
            fa.append(edges[(min(u, v), max(u, v))])
            fs.append(1 if u < v else -1)
        facet_arcs.append(np.array(fa, dtype=np.int64))
        facet_signs.append(np.array(fs, dtype=np.int64))
        facet_cells.append(key)
        a, b = key
        cell_f[a].append(f)
        cell_s[a].append(-1)
        if b >= 0:
            cell_f[b].append(f)
            cell_s[b].append(1)

    used = np.zeros(len(positions), dtype=bool)
    used[arcs.ravel()] = True
    if not used.all():
        raise InconsistentGeometry("merged vertices not referenced by any arc")

    k = CellComplex(
        vertices=positions,
        arcs=arcs,
        facet_arcs=facet_arcs,
        facet_signs=facet_signs,
        facet_cells=np.array(facet_cells, dtype=np.int64).reshape(-1, 2),
        cell_facets=[np.array(x, dtype=np.int64) for x in cell_f],
        cell_sides=[np.array(x, dtype=np.int64) for x in cell_s],
        generators=np.array([c.generator for c in cells]).reshape(-1, 3),
        cuboid=q,
        eps=eps,
    )
    chi = k.euler_characteristic()
    if chi != 1:
        raise InconsistentGeometry(f"Euler characteristic {chi} != 1 after extraction")
    near = k.near_face_facets()
    if len(near):
        log.warning("%d interior facets lie within eps of a cuboid face: %s", len(near), near.tolist()[:10])
    return k


def assign_weights(k: CellComplex, arc_mode: str = "unit", facet_mode: str = "unit") -> CellComplex:
    """Return a copy of ``k`` with arc weights (unit|length) and facet weights (unit|area)."""
    if arc_mode == "unit":
        aw = np.ones(k.n_arcs)
    elif arc_mode == "length":
        aw = k.arc_lengths()
    else:
        raise ConfigError(f"unknown arc weight mode {arc_mode!r}")
    if facet_mode == "unit":
        fw = np.ones(k.n_facets)
    elif facet_mode == "area":
        fw = k.facet_areas()
    else:
        raise ConfigError(f"unknown facet weight mode {facet_mode!r}")
    if np.any(aw <= 0):
        raise ZeroWeight(f"{int(np.sum(aw <= 0))} arcs have zero length")
    if np.any(fw <= 0):
        raise ZeroWeight(f"{int(np.sum(fw <= 0))} facets have zero area")
    return replace(k, arc_weights=aw, facet_weights=fw, _cache={})


def check_loops_closed(k: CellComplex) -> bool:
    for f in range(k.n_facets):
        a, s = k.facet_arcs[f], k.facet_signs[f]
        heads = np.where(s > 0, k.arcs[a, 1], k.arcs[a, 0])
        tails = np.where(s > 0, k.arcs[a, 0], k.arcs[a, 1])
        if not np.array_equal(heads, np.roll(tails, -1)):
            return False
    return True


def facet_planarity(k: CellComplex, f: int) -> float:
    """Largest distance of a facet vertex to the facet's least-squares plane."""
    loop = k.vertices[k.facet_vertices(f)]
    rel = loop - loop.mean(axis=0)
    _, _, vt = np.linalg.svd(rel)
    return float(np.max(np.abs(rel @ vt[-1])))


# ---------------------------------------------------------------- text format

def save_complex(k: CellComplex, path: str | Path) -> None:
    """Line-oriented text dump; floats use ``repr`` so loading is bit-exact."""
    lines = [
        "vorocrack-complex 1",
        f"cuboid {float(k.cuboid.d1)!r} {float(k.cuboid.d2)!r} {float(k.cuboid.d3)!r} eps {float(k.eps)!r}",
        f"counts {k.n_vertices} {k.n_arcs} {k.n_facets} {k.n_cells}",
    ]
    for x, y, z in k.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for (t, h), w in zip(k.arcs, k.arc_weights):
        lines.append(f"a {t} {h} {float(w)!r}")
    for f in range(k.n_facets):
        signed = " ".join(str(int(s) * (int(a) + 1)) for a, s in zip(k.facet_arcs[f], k.facet_signs[f]))
        a, b = k.facet_cells[f]
        lines.append(f"f {float(k.facet_weights[f])!r} {a} {b} {int(b < 0)} : {signed}")
    for c in range(k.n_cells):
        g = k.generators[c]
        items = " ".join(f"{int(f)}{'+' if s > 0 else '-'}" for f, s in zip(k.cell_facets[c], k.cell_sides[c]))
        lines.append(f"c {float(g[0])!r} {float(g[1])!r} {float(g[2])!r} : {items}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_complex(path: str | Path) -> CellComplex:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("vorocrack-complex"):
        raise ConfigError(f"{path} is not a complex file")
    parts = lines[1].split()
    q = Cuboid(float(parts[1]), float(parts[2]), float(parts[3]))
    eps = float(parts[5])
    nv, na, nf, nc = (int(x) for x in lines[2].split()[1:])
    pos = 3
    verts = np.array([[float(x) for x in lines[pos + i].split()[1:]] for i in range(nv)]).reshape(-1, 3)
    pos += nv
    arcs, aw = [], []
    for i in range(na):
        _, t, h, w = lines[pos + i].split()
        arcs.append((int(t), int(h)))
        aw.append(float(w))
    pos += na
    fa, fs, fc, fw = [], [], [], []
    for i in range(nf):
        head, loop = lines[pos + i].split(" : ")
        _, w, a, b, _flag = head.split()
        signed = np.array([int(x) for x in loop.split()], dtype=np.int64)
        fa.append(np.abs(signed) - 1)
        fs.append(np.sign(signed))
        fc.append((int(a), int(b)))
        fw.append(float(w))
    pos += nf
    cf, cs, gens = [], [], []
    for i in range(nc):
        head, items = lines[pos + i].split(" : ")
        gens.append([float(x) for x in head.split()[1:]])
        toks = items.split()
        cf.append(np.array([int(t[:-1]) for t in toks], dtype=np.int64))
        cs.append(np.array([1 if t[-1] == "+" else -1 for t in toks], dtype=np.int64))
    return CellComplex(
        vertices=verts,
        arcs=np.array(arcs, dtype=np.int64).reshape(-1, 2),
        facet_arcs=fa,
        facet_signs=fs,
        facet_cells=np.array(fc, dtype=np.int64).reshape(-1, 2),
        cell_facets=cf,
        cell_sides=cs,
        generators=np.array(gens).reshape(-1, 3),
        cuboid=q,
        arc_weights=np.array(aw),
        facet_weights=np.array(fw),
        eps=eps,
    )
