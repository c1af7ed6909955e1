"""Embedding binary crack ground truth into grayscale background patches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DimensionMismatch, InsufficientSamples

GRAY_MAX = 65535


@dataclass(frozen=True)
class GrayStats:
    mean: float
    std: float
    source: str = "manual"

    def __post_init__(self):
        if self.std < 0:
            raise ConfigError("standard deviation must be non-negative")


def estimate_pore_stats(patch: np.ndarray, pore_mask: np.ndarray) -> GrayStats:
    """Sample mean and sample standard deviation (n - 1) of the masked grayvalues."""
    if patch.shape != pore_mask.shape:
        raise DimensionMismatch("patch and pore mask differ in shape")
    vals = patch[pore_mask.astype(bool)].astype(float)
    if vals.size < 2:
        raise InsufficientSamples(f"need at least 2 pore voxels, found {vals.size}")
    return GrayStats(float(vals.mean()), float(vals.std(ddof=1)), "estimated_from_pores")


def threshold_pores(patch: np.ndarray, threshold: float) -> np.ndarray:
    return (patch < threshold).astype(np.uint8)


def synthetic_background(dims, mean: float, std: float, seed: int | None) -> np.ndarray:
    """Flat background with white Gaussian noise, for runs without CT data."""
    rng = np.random.default_rng(seed)
    vals = rng.normal(mean, std, size=tuple(dims))
    return np.clip(np.rint(vals), 0, GRAY_MAX).astype(np.uint16)


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    with np.errstate(over="ignore"):
        # very small sigma overflows to inf, which correctly maps to weight 0
        k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    out = img.astype(float)
    if sigma <= 0:
        return out
    k = gaussian_kernel(sigma)
    for axis in range(img.ndim):
        out = ndimage.correlate1d(out, k, axis=axis, mode="nearest")
    return out


def embed_crack(
    patch: np.ndarray,
    gt: np.ndarray,
    stats: GrayStats,
    sigma: float = 0.7,
    seed: int | None = None,
) -> np.ndarray:
    """Replace crack voxels by air-like grayvalues and smooth the transition.

    Crack voxels are zeroed, then redrawn i.i.d. from N(mean, std^2) in flat
    voxel order. The Gaussian blur is computed on the whole volume but written
    back only at crack voxels and their 26-neighbors.
    """
    if patch.shape != gt.shape:
        raise DimensionMismatch(f"patch {patch.shape} and ground truth {gt.shape} differ")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    crack = gt.astype(bool)
    out = patch.astype(np.uint16) * (~crack)
    n = int(crack.sum())
    if n == 0:
        return out.astype(np.uint16)
    rng = np.random.default_rng(seed)
    draws = rng.normal(stats.mean, stats.std, size=n)
    out[crack] = np.clip(np.rint(draws), 0, GRAY_MAX).astype(np.uint16)
    if sigma > 0:
        halo = ndimage.binary_dilation(crack, structure=np.ones((3, 3, 3), dtype=bool))
        smooth = gaussian_blur(out, sigma)
        out[halo] = np.clip(np.rint(smooth[halo]), 0, GRAY_MAX).astype(np.uint16)
    return out.astype(np.uint16)
