from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from vorocrack.embed import (
    GrayStats,
    embed_crack,
    estimate_pore_stats,
    gaussian_kernel,
    synthetic_background,
    threshold_pores,
)
from vorocrack.errors import ConfigError, DimensionMismatch, InsufficientSamples


def test_constant_pores():
    patch = np.full((4, 4, 4), 40, dtype=np.uint16)
    s = estimate_pore_stats(patch, np.ones_like(patch))
    assert (s.mean, s.std) == (40.0, 0.0)
    assert s.source == "estimated_from_pores"


def test_two_pore_voxels():
    patch = np.zeros((2, 2, 2), dtype=np.uint16)
    mask = np.zeros_like(patch)
    patch[0, 0, 0], patch[1, 1, 1] = 10, 20
    mask[0, 0, 0] = mask[1, 1, 1] = 1
    s = estimate_pore_stats(patch, mask)
    assert s.mean == 15.0 and s.std == pytest.approx(math.sqrt(50.0))


def test_noise_stats_concentrate():
    rng = np.random.default_rng(0)
    patch = rng.normal(30.0, 5.0, (100, 100)).reshape(10, 10, 100)
    s = estimate_pore_stats(patch, np.ones(patch.shape, dtype=np.uint8))
    assert abs(s.mean - 30.0) < 0.2 and abs(s.std - 5.0) < 0.15


def test_stats_errors():
    patch = np.zeros((3, 3, 3), dtype=np.uint16)
    mask = np.zeros_like(patch)
    mask[0, 0, 0] = 1
    with pytest.raises(InsufficientSamples):
        estimate_pore_stats(patch, mask)
    with pytest.raises(DimensionMismatch):
        estimate_pore_stats(patch, np.ones((3, 3, 2)))
    with pytest.raises(ConfigError):
        GrayStats(1.0, -1.0)


def test_threshold_rule():
    patch = np.array([[[5, 10, 15]]], dtype=np.uint16)
    assert threshold_pores(patch, 10).tolist() == [[[1, 0, 0]]]


def test_kernel_is_normalized_and_truncated():
    k = gaussian_kernel(0.7)
    assert len(k) == 2 * math.ceil(2.1) + 1
    assert k.sum() == pytest.approx(1.0)
    assert np.allclose(k, k[::-1])


def test_empty_ground_truth_leaves_patch():
    patch = synthetic_background((8, 9, 10), 30000, 1500, seed=1)
    out = embed_crack(patch, np.zeros(patch.shape, dtype=np.uint8), GrayStats(8000, 1000), 0.7, seed=2)
    assert out.tobytes() == patch.tobytes()


def test_degenerate_distribution_sets_exact_value():
    patch = synthetic_background((10, 10, 10), 30000, 1500, seed=1)
    gt = np.zeros(patch.shape, dtype=np.uint8)
    gt[3:6, 2:7, 4] = 1
    out = embed_crack(patch, gt, GrayStats(8000.0, 0.0), sigma=0.0, seed=3)
    assert np.all(out[gt == 1] == 8000)
    assert np.array_equal(out[gt == 0], patch[gt == 0])


def test_locality_outside_halo():
    rng = np.random.default_rng(4)
    patch = synthetic_background((20, 20, 20), 30000, 1500, seed=5)
    gt = (rng.random(patch.shape) < 0.01).astype(np.uint8)
    out = embed_crack(patch, gt, GrayStats(8000, 1000), sigma=1.5, seed=6)
    halo = ndimage.binary_dilation(gt.astype(bool), np.ones((3, 3, 3), dtype=bool))
    assert out[~halo].tobytes() == patch[~halo].tobytes()
    assert np.any(out[halo & ~gt.astype(bool)] != patch[halo & ~gt.astype(bool)])


def test_halo_values_are_blurred_crack_image():
    patch = synthetic_background((12, 12, 12), 30000, 1500, seed=1)
    gt = np.zeros(patch.shape, dtype=np.uint8)
    gt[6, 3:9, 3:9] = 1
    sigma = 0.7
    out = embed_crack(patch, gt, GrayStats(8000, 0.0), sigma=sigma, seed=0)
    staged = patch.astype(float) * (1 - gt)
    staged[gt == 1] = 8000
    # independent blur: scipy's own truncated Gaussian with matching radius
    ref = ndimage.gaussian_filter(staged, sigma, mode="nearest", truncate=math.ceil(3 * sigma) / sigma)
    halo = ndimage.binary_dilation(gt.astype(bool), np.ones((3, 3, 3), dtype=bool))
    assert np.max(np.abs(out[halo].astype(float) - ref[halo])) <= 1.0


def test_mean_of_many_crack_voxels():
    dims = (50, 50, 40)
    patch = np.full(dims, 30000, dtype=np.uint16)
    gt = np.ones(dims, dtype=np.uint8)
    n = gt.size
    mu, sd = 8000.0, 1000.0
    out = embed_crack(patch, gt, GrayStats(mu, sd), sigma=0.0, seed=11)
    assert n == 10**5
    assert abs(out.astype(float).mean() - mu) <= 3 * sd / math.sqrt(n)


def test_determinism_and_shape_errors():
    patch = synthetic_background((6, 6, 6), 30000, 1500, seed=1)
    gt = np.zeros(patch.shape, dtype=np.uint8)
    gt[2, 2, 2] = 1
    a = embed_crack(patch, gt, GrayStats(8000, 1000), 0.7, seed=9)
    b = embed_crack(patch, gt, GrayStats(8000, 1000), 0.7, seed=9)
    assert a.tobytes() == b.tobytes() and a.dtype == np.uint16
    with pytest.raises(DimensionMismatch):
        embed_crack(patch, gt[:5], GrayStats(8000, 1000))
    with pytest.raises(ConfigError):
        embed_crack(patch, gt, GrayStats(8000, 1000), sigma=-1.0)


def test_clamping_to_uint16():
    patch = np.full((4, 4, 4), 100, dtype=np.uint16)
    gt = np.ones_like(patch, dtype=np.uint8)
    assert np.all(embed_crack(patch, gt, GrayStats(-500.0, 0.0), 0.0) == 0)
    assert np.all(embed_crack(patch, gt, GrayStats(70000.0, 0.0), 0.0) == 65535)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.0, 2.0), frac=st.floats(0.0, 0.1))
def test_locality_property(seed, sigma, frac):
    rng = np.random.default_rng(seed)
    patch = rng.integers(0, 65536, (9, 10, 11)).astype(np.uint16)
    gt = (rng.random(patch.shape) < frac).astype(np.uint8)
    out = embed_crack(patch, gt, GrayStats(5000, 800), sigma=sigma, seed=seed)
    halo = ndimage.binary_dilation(gt.astype(bool), np.ones((3, 3, 3), dtype=bool))
    assert np.array_equal(out[~halo], patch[~halo])
