"""Minimum-weight surfaces bounded by a cycle.

Every facet enters the binary program twice: column ``f`` in its stored
orientation and column ``F + f`` reversed (the negated incidence column).
Both carry the facet weight. Row ``a`` of the system is the arc ``a``; its
right-hand side is the sign with which the cycle traverses ``a`` (0 off the
cycle).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .complex import CellComplex
from .errors import ConfigError, Infeasible
from .ipsolve import BinaryProgram, IpSolution, solve_binary
from .paths import Cycle, validate_cycle

log = logging.getLogger(__name__)


@dataclass
class Surface:
    facets: np.ndarray
    signs: np.ndarray
    weight: float
    cycle: Cycle | None = None
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.facets)


def msp_as_ip(k: CellComplex, h: Cycle) -> BinaryProgram:
    """Arc-facet program for cycle ``h``; variable names are ``f<id>p`` / ``f<id>n``."""
    validate_cycle(k, h)
    if np.any(k.facet_weights <= 0):
        raise ConfigError("facet weights must be strictly positive")
    d = k.incidence()
    mat = sparse.hstack([d, -d], format="csr")
    costs = np.concatenate([k.facet_weights, k.facet_weights])
    names = [f"f{f}p" for f in range(k.n_facets)] + [f"f{f}n" for f in range(k.n_facets)]
    return BinaryProgram(costs, mat, h.q_vector(k.n_arcs), names)


def decode(k: CellComplex, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nf = k.n_facets
    pos, neg = y[:nf].astype(bool), y[nf:].astype(bool)
    if np.any(pos & neg):
        raise RuntimeError("a facet was selected in both orientations")
    facets = np.flatnonzero(pos | neg)
    signs = np.where(pos[facets], 1, -1).astype(np.int64)
    return facets, signs


def min_weight_surface(k: CellComplex, h: Cycle, max_nodes: int = 100_000) -> Surface:
    """Exact minimum-weight facet set whose signed boundary is ``h``."""
    prog = msp_as_ip(k, h)
    sol: IpSolution = solve_binary(prog, max_nodes=max_nodes)
    if not sol.optimal:
        raise Infeasible("no facet set is bounded by the cycle")
    facets, signs = decode(k, sol.assignment)
    n_comp, touching = surface_components(k, facets, h)
    stats = {
        "objective": sol.objective,
        "root_bound": sol.root_bound,
        "node_count": sol.node_count,
        "lp_iterations": sol.lp_iterations,
        "n_facets": int(len(facets)),
        "components": n_comp,
        "connected": n_comp == 1,
    }
    if n_comp != 1:
        log.warning("minimum-weight surface has %d components", n_comp)
    if not touching:
        raise RuntimeError("surface component detached from the cycle")
    return Surface(facets, signs, float(k.facet_weights[facets].sum()), h, stats)


def surface_chain(k: CellComplex, s: Surface) -> np.ndarray:
    """Integer boundary ``D y`` of the oriented facet set, one entry per arc."""
    y = np.zeros(k.n_facets, dtype=np.int64)
    y[s.facets] = s.signs
    return k.incidence() @ y


def surface_boundary(k: CellComplex, s: Surface) -> tuple[np.ndarray, np.ndarray]:
    chain = surface_chain(k, s)
    arcs = np.flatnonzero(chain)
    return arcs, chain[arcs]


def surface_components(k: CellComplex, facets: np.ndarray, h: Cycle | None = None) -> tuple[int, bool]:
    """Number of facet-adjacency components, and whether each touches ``h``."""
    if len(facets) == 0:
        return 0, True
    sub = k.incidence()[:, facets]
    sub = abs(sub)
    adj = (sub.T @ sub).tocsr()
    n_comp, labels = connected_components(adj, directed=False)
    if h is None:
        return n_comp, True
    on_cycle = np.zeros(k.n_arcs, dtype=bool)
    on_cycle[h.arcs] = True
    touches = np.asarray(sub[on_cycle].sum(axis=0)).ravel() > 0
    touching = all(touches[labels == c].any() for c in range(n_comp))
    return n_comp, touching


def surface_generator_pairs(k: CellComplex, s: Surface) -> set[tuple[int, int]]:
    """Unordered pairs of cells separated by interior facets of the surface."""
    pairs = set()
    for f in s.facets:
        a, b = (int(x) for x in k.facet_cells[f])
        if b >= 0:
            pairs.add((a, b))
    return pairs
