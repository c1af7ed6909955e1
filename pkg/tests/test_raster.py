from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vorocrack.errors import ConfigError, DimensionMismatch
from vorocrack.points import Cuboid, sample_poisson
from vorocrack.raster import (
    adaptive_dilate,
    apply_microstructure,
    dilate_slice_2x2,
    dilation_walk,
    median_filter_binary,
    rasterize_labels,
    rasterize_surface,
    union_branching,
)
from vorocrack.volume import load_volume, save_volume

from oracles import dilation_surface_raster, naive_median, naive_surface_raster

HALVES = np.array([[2.5, 5.0, 5.0], [7.5, 5.0, 5.0]])


def test_single_cell_labels_everything_zero():
    assert not rasterize_labels(np.array([[1.0, 2.0, 3.0]]), (4, 4, 4)).any()


def test_two_halves_split_by_x_index():
    lab = rasterize_labels(HALVES, (10, 10, 10))
    assert np.bincount(lab.ravel()).tolist() == [500, 500]
    assert np.all(lab[:5] == 0) and np.all(lab[5:] == 1)


def test_world_units_scale_to_voxels():
    lab = rasterize_labels(HALVES / 10.0, (10, 10, 10), Cuboid.unit())
    assert np.all(lab[:5] == 0) and np.all(lab[5:] == 1)


def test_label_ties_go_to_lowest_id():
    # voxel centre x = 4.5 is equidistant from both generators
    lab = rasterize_labels(np.array([[5.5, 5.0, 5.0], [3.5, 5.0, 5.0]]), (10, 10, 10))
    assert np.all(lab[4] == 0)


def test_every_cell_receives_voxels():
    q = Cuboid(100.0, 100.0, 100.0)
    pts = sample_poisson(500 / 100.0**3, q, seed=1).points
    lab = rasterize_labels(pts, (100, 100, 100), q)
    assert len(np.unique(lab)) == len(pts)


def test_bisector_surface_marks_two_planes():
    lab = rasterize_labels(HALVES, (10, 10, 10))
    j = rasterize_surface(lab, {(0, 1)})
    assert int(j.sum()) == 200
    assert np.all(j[4] == 1) and np.all(j[5] == 1)
    assert not rasterize_surface(lab, set()).any()


def test_surface_raster_matches_naive_loops_small():
    rng = np.random.default_rng(0)
    for _ in range(5):
        dims = tuple(int(d) for d in rng.integers(4, 13, 3))
        pts = rng.random((12, 3)) * dims
        lab = rasterize_labels(pts, dims)
        pairs = {tuple(sorted(map(int, rng.choice(12, 2, replace=False)))) for _ in range(6)}
        assert np.array_equal(rasterize_surface(lab, pairs), naive_surface_raster(lab, pairs))


def test_dilation_walk_properties():
    assert not dilation_walk(50, 0.0, 1).any()
    assert dilation_walk(50, 1.0, 1).tolist() == list(range(50))
    w = dilation_walk(200, 0.3, 7)
    assert w[0] == 0 and np.all(np.diff(w) >= 0) and np.all(np.diff(w) <= 1)
    assert np.array_equal(w, dilation_walk(200, 0.3, 7))
    with pytest.raises(ConfigError):
        dilation_walk(5, 1.5, 0)


def test_single_voxel_dilates_to_two_by_two():
    sl = np.zeros((6, 6), dtype=np.uint8)
    sl[2, 3] = 1
    out = dilate_slice_2x2(sl, 1)
    assert out.sum() == 4 and out[2:4, 3:5].all()
    big = np.zeros((10, 10), dtype=np.uint8)
    big[2, 3] = 1
    out3 = dilate_slice_2x2(big, 3)
    assert out3.sum() == 16 and out3[2:6, 3:7].all()
    # growth stops at the slice edge
    assert dilate_slice_2x2(sl, 3).sum() == 12


def test_adaptive_dilation_identity_and_full_walk():
    rng = np.random.default_rng(3)
    j = (rng.random((12, 9, 9)) < 0.02).astype(np.uint8)
    assert np.array_equal(adaptive_dilate(j, 0.0, 5), j)
    out = adaptive_dilate(j, 1.0, 5)
    for x in range(12):
        assert np.array_equal(out[x], dilate_slice_2x2(j[x], x).astype(np.uint8))
    assert np.all(out >= j)


def test_microstructure_trivial_inputs():
    zeros = np.zeros((10, 10, 10), dtype=np.uint8)
    assert not apply_microstructure(zeros, 0.05, 1).any()
    assert apply_microstructure(np.ones_like(zeros), 0.05, 1).all()


def test_microstructure_single_voxel_gives_one_fine_cell():
    dims = (16, 16, 16)
    j = np.zeros(dims, dtype=np.uint8)
    j[7, 8, 9] = 1
    out = apply_microstructure(j, 0.02, 11)
    fine = sample_poisson(0.02, Cuboid(16.0, 16.0, 16.0), 11)
    lab = rasterize_labels(fine.points, dims)
    assert np.array_equal(out.astype(bool), lab == lab[7, 8, 9])


def test_microstructure_is_superset():
    rng = np.random.default_rng(2)
    j = (rng.random((20, 20, 20)) < 0.01).astype(np.uint8)
    out = apply_microstructure(j, 0.05, 4)
    assert np.all(out >= j) and out.sum() > j.sum()


def test_median_examples():
    ones = np.ones((5, 6, 7), dtype=np.uint8)
    zeros = np.zeros_like(ones)
    assert not median_filter_binary(zeros).any()
    # zero padding erodes corners and edges of a constant-one volume, the interior stays
    assert median_filter_binary(ones)[1:-1, 1:-1, 1:-1].all()
    single = zeros.copy()
    single[2, 3, 3] = 1
    assert not median_filter_binary(single).any()
    with pytest.raises(ConfigError):
        median_filter_binary(ones, 0)


@pytest.mark.parametrize("radius", [1, 2])
def test_median_matches_recount(radius):
    rng = np.random.default_rng(radius)
    j = (rng.random((9, 10, 11)) < 0.5).astype(np.uint8)
    assert np.array_equal(median_filter_binary(j, radius), naive_median(j, radius))


def test_union_properties():
    rng = np.random.default_rng(1)
    a = (rng.random((6, 6, 6)) < 0.3).astype(np.uint8)
    b = (rng.random((6, 6, 6)) < 0.3).astype(np.uint8)
    assert np.array_equal(union_branching(a, np.zeros_like(a)), a)
    assert np.array_equal(union_branching(a, a), a)
    u = union_branching(a, b)
    assert u.sum() <= a.sum() + b.sum()
    with pytest.raises(DimensionMismatch):
        union_branching(a, np.zeros((6, 6, 5), dtype=np.uint8))


@pytest.mark.parametrize("flavor,dtype", [("label", np.int32), ("binary", np.uint8), ("gray", np.uint16)])
def test_volume_round_trip(tmp_path, flavor, dtype):
    rng = np.random.default_rng(0)
    data = rng.integers(0, 2 if flavor == "binary" else 1000, (3, 4, 5)).astype(dtype)
    path = tmp_path / "v.raw"
    save_volume(path, data, flavor, stage="test")
    back, meta = load_volume(path)
    assert np.array_equal(back, data) and back.dtype == dtype
    assert meta["dims"] == [3, 4, 5] and meta["flavor"] == flavor
    # x slowest: element (x, y, z) sits at (x * d2 + y) * d3 + z
    raw = np.frombuffer(path.read_bytes(), dtype=back.dtype.newbyteorder("<"))
    assert raw[(2 * 4 + 1) * 5 + 3] == data[2, 1, 3]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 15), d=st.integers(3, 14))
def test_surface_raster_property(seed, n, d):
    rng = np.random.default_rng(seed)
    dims = (d, d + 1, d + 2)
    lab = rasterize_labels(rng.random((n, 3)) * dims, dims)
    pairs = {(int(a), int(b)) for a, b in rng.integers(0, n, (4, 2)) if a != b}
    out = rasterize_surface(lab, pairs)
    assert np.array_equal(out, dilation_surface_raster(lab, pairs))
