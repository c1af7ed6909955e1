from __future__ import annotations

import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vorocrack.complex import assign_weights
from vorocrack.errors import InvalidCycle
from vorocrack.minsurf import (
    Surface,
    min_weight_surface,
    msp_as_ip,
    surface_boundary,
    surface_chain,
    surface_components,
    surface_generator_pairs,
)
from vorocrack.paths import Cycle, boundary_cycle
from vorocrack.points import Cuboid, sample_poisson

from conftest import make_complex
from oracles import exhaustive_min_surface, facet_loop_vertices, ring_cycle


def _top_facet(k):
    return next(f for f in range(k.n_facets) if np.all(k.vertices[k.facet_vertices(f), 2] == 1.0))


def test_cube_program_shape(cube, cube_top_ring):
    prog = msp_as_ip(cube, cube_top_ring)
    assert prog.n_vars == 12 and prog.n_rows == 12
    assert np.count_nonzero(prog.rhs) == 4


def test_cube_top_ring_selects_top_facet(cube, cube_top_ring):
    s = min_weight_surface(cube, cube_top_ring)
    assert s.facets.tolist() == [_top_facet(cube)] and s.weight == 1.0
    # every signed subset of the six facets
    d = cube.incidence().toarray()
    q = cube_top_ring.q_vector(cube.n_arcs)
    feasible = sorted(
        sum(1 for c in y if c)
        for y in itertools.product((-1, 0, 1), repeat=6)
        if np.array_equal(d @ np.array(y), q)
    )
    assert feasible == [1, 5]
    assert exhaustive_min_surface(cube, q) == 1.0


def test_half_cube_ring_selects_bisector(half_cubes):
    k = assign_weights(half_cubes, "unit", "unit")
    mid = [v for v in range(k.n_vertices) if k.vertices[v, 0] == 0.5]
    ring = sorted(mid, key=lambda v: np.arctan2(k.vertices[v, 2] - 0.5, k.vertices[v, 1] - 0.5))
    h = ring_cycle(k, ring)
    q = h.q_vector(k.n_arcs)
    assert np.count_nonzero(q) == 4
    s = min_weight_surface(k, h)
    assert len(s.facets) == 1 and not k.facet_on_boundary[s.facets[0]]
    assert s.weight == 1.0 == exhaustive_min_surface(k, q)
    assert surface_generator_pairs(k, s) == {(0, 1)}


def test_reversed_columns_are_negated(cube, cube_top_ring):
    prog = msp_as_ip(cube, cube_top_ring)
    m = prog.matrix.toarray()
    assert np.array_equal(m[:, 6:], -m[:, :6])
    assert np.array_equal(prog.costs[:6], prog.costs[6:])


def test_invalid_cycle_rejected(cube):
    with pytest.raises(InvalidCycle):
        msp_as_ip(cube, Cycle([0, 1], [0, 0], [1, -1]))


def test_surface_boundary_of_single_facet(cube):
    f = _top_facet(cube)
    s = Surface(np.array([f]), np.array([1]), 1.0)
    arcs, signs = surface_boundary(cube, s)
    assert sorted(arcs.tolist()) == sorted(cube.facet_arcs[f].tolist())
    lookup = dict(zip(cube.facet_arcs[f].tolist(), cube.facet_signs[f].tolist()))
    assert all(lookup[a] == sg for a, sg in zip(arcs.tolist(), signs.tolist()))
    empty = surface_boundary(cube, Surface(np.array([], dtype=int), np.array([], dtype=int), 0.0))
    assert len(empty[0]) == 0


def test_surface_boundary_matches_cycle_exactly():
    k = make_complex(sample_poisson(150.0, Cuboid.unit(), seed=3).points)
    h = boundary_cycle(k, (0.3, 0.6, 0.4, 0.7))
    s = min_weight_surface(k, h)
    assert np.array_equal(surface_chain(k, s), h.q_vector(k.n_arcs))
    assert len(set(s.facets.tolist())) == len(s.facets)
    assert s.weight == pytest.approx(float(k.facet_weights[s.facets].sum()))
    n_comp, touching = surface_components(k, s.facets, h)
    assert touching and s.stats["components"] == n_comp


def test_reversed_cycle_flips_orientations():
    k = make_complex(sample_poisson(80.0, Cuboid.unit(), seed=5).points)
    h = boundary_cycle(k)
    a = min_weight_surface(k, h)
    b = min_weight_surface(k, h.reversed())
    assert a.weight == pytest.approx(b.weight)
    assert np.array_equal(surface_chain(k, b), -h.q_vector(k.n_arcs))


def test_doubling_weights_doubles_objective():
    k = make_complex(sample_poisson(100.0, Cuboid.unit(), seed=7).points, facet_mode="area")
    h = boundary_cycle(k)
    s1 = min_weight_surface(k, h)
    k2 = assign_weights(k, "unit", "area")
    k2.facet_weights = k2.facet_weights * 2
    s2 = min_weight_surface(k2, h)
    assert s2.weight == pytest.approx(2 * s1.weight)
    assert np.array_equal(np.sort(s1.facets), np.sort(s2.facets))


def test_facet_loop_cycle_is_spanned_by_that_facet():
    k = make_complex(sample_poisson(60.0, Cuboid.unit(), seed=9).points)
    rng = np.random.default_rng(0)
    for f in rng.choice(k.n_facets, 10, replace=False):
        h = ring_cycle(k, facet_loop_vertices(k, int(f)))
        s = min_weight_surface(k, h)
        assert np.array_equal(surface_chain(k, s), h.q_vector(k.n_arcs))
        assert s.weight <= 1.0


def test_component_count_is_logged(caplog):
    k = make_complex(sample_poisson(60.0, Cuboid.unit(), seed=2).points)
    with caplog.at_level(logging.WARNING):
        s = min_weight_surface(k, boundary_cycle(k))
    if s.stats["components"] > 1:
        assert "components" in caplog.text
    else:
        assert s.stats["connected"]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 5))
def test_small_complexes_match_exhaustive_search(seed, n):
    rng = np.random.default_rng(seed)
    k = make_complex(rng.random((n, 3)))
    f = int(rng.integers(k.n_facets))
    h = ring_cycle(k, facet_loop_vertices(k, f))
    q = h.q_vector(k.n_arcs)
    assert min_weight_surface(k, h).weight == exhaustive_min_surface(k, q)
