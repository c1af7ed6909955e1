"""Wavefront OBJ export of complexes, cycles and surfaces."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .complex import CellComplex
from .minsurf import Surface
from .paths import Cycle


def _v(p) -> str:
    return f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}"


def write_obj(path: str | Path, lines: list[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n")


def surface_obj(k: CellComplex, s: Surface, name: str = "surface") -> list[str]:
    """Fan triangulation of every surface facet around its centroid.

    Triangles follow the orientation the surface selected for each facet; each
    facet is its own ``g`` group named after the facet id.
    """
    out = [f"# {name}: {len(s.facets)} facets, weight {float(s.weight)!r}", f"o {name}"]
    nv = 0
    for f, sign in zip(s.facets, s.signs):
        loop = k.facet_vertices(int(f))
        if sign < 0:
            loop = loop[::-1]
        pts = k.vertices[loop]
        out.append(f"g facet_{int(f)}")
        for p in pts:
            out.append(_v(p))
        out.append(_v(pts.mean(axis=0)))
        c = nv + len(pts) + 1
        m = len(pts)
        for i in range(m):
            out.append(f"f {c} {nv + 1 + i} {nv + 1 + (i + 1) % m}")
        nv += m + 1
    return out


def diagram_obj(k: CellComplex) -> list[str]:
    """All facets of the complex as polygons over the shared vertex list."""
    out = [f"# complex: {k.n_vertices} vertices, {k.n_facets} facets", "o diagram"]
    out += [_v(p) for p in k.vertices]
    for f in range(k.n_facets):
        out.append("f " + " ".join(str(int(v) + 1) for v in k.facet_vertices(f)))
    return out


def wireframe_obj(k: CellComplex) -> list[str]:
    out = [f"# wireframe: {k.n_arcs} arcs", "o wireframe"]
    out += [_v(p) for p in k.vertices]
    out += [f"l {int(t) + 1} {int(h) + 1}" for t, h in k.arcs]
    return out


def cycle_obj(k: CellComplex, h: Cycle) -> list[str]:
    out = [f"# cycle: {len(h.arcs)} arcs", "o cycle"]
    out += [_v(k.vertices[v]) for v in h.vertices]
    idx = list(range(1, len(h.vertices) + 1)) + [1]
    out.append("l " + " ".join(map(str, idx)))
    return out


def read_obj_counts(path: str | Path) -> dict[str, int]:
    """Count vertices, faces, lines and groups in an OBJ file."""
    counts = {"v": 0, "f": 0, "l": 0, "g": 0}
    for line in Path(path).read_text().splitlines():
        tag = line.split(" ", 1)[0]
        if tag in counts:
            counts[tag] += 1
    return counts


def save_surface_facets(s: Surface, path: str | Path) -> None:
    """Facet-id list with orientation signs, one facet per line."""
    lines = [f"surface {len(s.facets)} {float(s.weight)!r}"]
    lines += [f"{int(f)} {int(sg)}" for f, sg in zip(s.facets, s.signs)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_surface_facets(path: str | Path) -> Surface:
    lines = Path(path).read_text().splitlines()
    _, n, w = lines[0].split()
    rows = [tuple(int(x) for x in ln.split()) for ln in lines[1:1 + int(n)]]
    facets = np.array([r[0] for r in rows], dtype=np.int64)
    signs = np.array([r[1] for r in rows], dtype=np.int64)
    return Surface(facets, signs, float(w))
