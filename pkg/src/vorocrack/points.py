"""Generator point patterns: Poisson, Matérn cluster and force-biased hardcore.

All samplers are pure functions of their parameters and a seed. Randomness comes
from ``numpy.random.Generator`` seeded through ``SeedSequence`` so that the same
seed always reproduces the same pattern bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DegenerateInput, NonConvergence

SHRINK_FACTOR = 0.99
MAX_SWEEPS = 100_000
# force-biased packings of equal spheres jam near this fraction
MAX_VOLUME_FRACTION = 0.64


@dataclass(frozen=True)
class Cuboid:
    d1: float
    d2: float
    d3: float

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0 and self.d3 > 0):
            raise ConfigError(f"cuboid extents must be positive, got {self.extents}")

    @property
    def extents(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3], dtype=float)

    @property
    def volume(self) -> float:
        return self.d1 * self.d2 * self.d3

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.extents))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return np.all((pts >= 0) & (pts < self.extents), axis=1)

    @classmethod
    def unit(cls) -> "Cuboid":
        return cls(1.0, 1.0, 1.0)


@dataclass
class PointPattern:
    """Generator points inside a cuboid plus the model that produced them.

    ``model`` is a plain dict such as ``{"type": "poisson", "lambda": 500}`` so it
    serializes directly into the JSON sidecar.
    """

    points: np.ndarray
    cuboid: Cuboid
    model: dict[str, Any]
    seed: int | None = None
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.points)

    def sidecar(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "seed": self.seed,
            "cuboid": [self.cuboid.d1, self.cuboid.d2, self.cuboid.d3],
            "count": len(self),
            "info": self.info,
        }


def _rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _clamp_inside(pts: np.ndarray, q: Cuboid) -> np.ndarray:
    # u * d can round up to d for u just below 1; keep the upper faces open
    upper = np.nextafter(q.extents, 0)
    return np.minimum(pts, upper)


def sample_poisson(lam: float, q: Cuboid, seed: int | None = None) -> PointPattern:
    """Homogeneous Poisson process of intensity ``lam`` per unit volume in ``q``."""
    if lam < 0:
        raise ConfigError("intensity must be non-negative")
    rng = _rng(seed)
    n = int(rng.poisson(lam * q.volume))
    pts = _clamp_inside(rng.random((n, 3)) * q.extents, q)
    return PointPattern(pts, q, {"type": "poisson", "lambda": lam}, seed)


def _uniform_ball(rng: np.random.Generator, n: int, r: float) -> np.ndarray:
    direction = rng.normal(size=(n, 3))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radius = r * rng.random((n, 1)) ** (1.0 / 3.0)
    return direction / norms * radius


def sample_matern_cluster(
    lambda_parent: float, mu_daughter: float, r: float, q: Cuboid, seed: int | None = None
) -> PointPattern:
    """Matérn cluster process with parents simulated on ``q`` dilated by ``r``.

    Each parent receives a Poisson(``mu_daughter``) number of daughters placed
    uniformly in the ball of radius ``r`` around it; only daughters falling in
    ``q`` are kept.
    """
    if min(lambda_parent, mu_daughter, r) < 0:
        raise ConfigError("cluster parameters must be non-negative")
    model = {"type": "matern", "lambda_parent": lambda_parent, "mu_daughter": mu_daughter, "r": r}
    rng = _rng(seed)
    ext = q.extents + 2 * r
    n_parents = int(rng.poisson(lambda_parent * float(np.prod(ext))))
    parents = rng.random((n_parents, 3)) * ext - r
    counts = rng.poisson(mu_daughter, size=n_parents)
    total = int(counts.sum())
    daughters = np.repeat(parents, counts, axis=0) + _uniform_ball(rng, total, r)
    kept = daughters[q.contains(daughters)]
    info = {"parents": n_parents, "daughters_total": total}
    return PointPattern(kept, q, model, seed, info)


def hardcore_radius(volume_fraction: float, volume: float, count: int) -> float:
    return (3.0 * volume_fraction * volume / (4.0 * math.pi * count)) ** (1.0 / 3.0)


def sample_hardcore(
    lam: float,
    volume_fraction: float,
    q: Cuboid,
    seed: int | None = None,
    *,
    boundary: str = "free",
    max_iter: int = MAX_SWEEPS,
) -> PointPattern:
    """Equal-sphere hardcore pattern by force-biased overlap removal.

    Produces exactly ``round(lam * |q|)`` centers whose pairwise distances are
    all at least ``2 * r_hard``, where ``r_hard`` is the sphere radius that gives
    the requested volume fraction. The outer (push) radius starts at the radius
    of a nominal full packing and shrinks geometrically by ``SHRINK_FACTOR`` per
    sweep; pairs closer than twice the outer radius are pushed apart.

    ``boundary="periodic"`` packs in the flat torus over ``q`` (centers stay in
    ``q``; Euclidean distances are never shorter than torus distances).
    ``boundary="free"`` keeps centers in ``q`` with plain Euclidean distances,
    so spheres may overhang the faces. ``boundary="contained"`` keeps every
    sphere fully inside ``q``; walls lower the attainable fraction considerably
    for small counts.
    """
    if not 0 < volume_fraction <= MAX_VOLUME_FRACTION:
        raise ConfigError(f"volume fraction must lie in (0, {MAX_VOLUME_FRACTION}]")
    if boundary not in ("periodic", "free", "contained"):
        raise ConfigError(f"unknown hardcore boundary mode {boundary!r}")
    count = int(round(lam * q.volume))
    model = {"type": "hardcore", "lambda": lam, "volume_fraction": volume_fraction, "boundary": boundary}
    rng = _rng(seed)
    ext = q.extents
    if count == 0:
        return PointPattern(np.empty((0, 3)), q, model, seed, {"r_hard": None, "sweeps": 0})
    r_hard = hardcore_radius(volume_fraction, q.volume, count)
    target = 2.0 * r_hard

    if boundary == "periodic":
        lo, hi, boxsize = np.zeros(3), ext, ext
    elif boundary == "free":
        lo, hi, boxsize = np.zeros(3), np.nextafter(ext, 0), None
    else:
        lo, hi, boxsize = np.full(3, r_hard), ext - r_hard, None
        if np.any(hi <= lo):
            raise NonConvergence("spheres do not fit inside the cuboid")
    pts = lo + rng.random((count, 3)) * (hi - lo)
    if count == 1:
        return PointPattern(_clamp_inside(pts, q), q, model, seed, {"r_hard": r_hard, "sweeps": 0})

    r_out = r_hard * volume_fraction ** (-1.0 / 3.0)
    # keep pushing slightly past the target so the last sweeps clear residual overlaps
    floor = r_hard * (1.0 + 1e-3)
    for sweep in range(max_iter):
        pts = _wrap_or_clip(pts, lo, hi, boxsize)
        tree = cKDTree(pts, boxsize=boxsize)
        # r_out >= r_hard, so every pair closer than the target is in this list
        pairs = tree.query_pairs(2.0 * r_out, output_type="ndarray")
        i, j = pairs[:, 0], pairs[:, 1]
        delta = pts[i] - pts[j]
        if boxsize is not None:
            delta -= boxsize * np.round(delta / boxsize)
        dist = np.linalg.norm(delta, axis=1)
        if not np.any(dist < target):
            info = {"r_hard": r_hard, "sweeps": sweep}
            return PointPattern(_clamp_inside(pts, q), q, model, seed, info)
        coincident = dist == 0
        if coincident.any():
            delta[coincident] = rng.normal(size=(int(coincident.sum()), 3))
            dist[coincident] = np.linalg.norm(delta[coincident], axis=1)
        step = delta * (0.5 * (2.0 * r_out - dist) / dist)[:, None]
        disp = np.stack(
            [np.bincount(i, step[:, k], count) - np.bincount(j, step[:, k], count) for k in range(3)],
            axis=1,
        )
        pts = pts + disp
        r_out = max(r_out * SHRINK_FACTOR, floor)
    raise NonConvergence(
        f"force-biased packing did not remove all overlaps within {max_iter} sweeps "
        f"(volume fraction {volume_fraction}, {count} spheres, {boundary} boundary)"
    )


def _wrap_or_clip(pts, lo, hi, boxsize):
    if boxsize is not None:
        pts = np.mod(pts, boxsize)
        # mod can return exactly boxsize for tiny negative inputs
        return np.where(pts >= boxsize, 0.0, pts)
    return np.clip(pts, lo, hi)


def explicit_pattern(points, q: Cuboid) -> PointPattern:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if not np.all(q.contains(pts)):
        raise ConfigError("explicit generator outside the cuboid")
    return PointPattern(pts, q, {"type": "explicit"}, None)


def sample_from_model(model: dict[str, Any], q: Cuboid, seed: int | None) -> PointPattern:
    kind = model.get("type")
    try:
        if kind == "poisson":
            return sample_poisson(model["lambda"], q, seed)
        if kind == "matern":
            return sample_matern_cluster(model["lambda_parent"], model["mu_daughter"], model["r"], q, seed)
        if kind == "hardcore":
            return sample_hardcore(
                model["lambda"], model.get("volume_fraction", 0.6), q, seed,
                boundary=model.get("boundary", "free"),
            )
        if kind == "explicit":
            return explicit_pattern(model["points"], q)
    except KeyError as exc:
        raise ConfigError(f"point-process model {kind!r} is missing parameter {exc}") from None
    raise ConfigError(f"unknown point-process model {kind!r}")


def dedup_points(pts: np.ndarray, eps: float) -> np.ndarray:
    """Return indices of the points kept after merging points closer than ``eps``.

    The first point of each close group survives.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return np.arange(len(pts))
    pairs = cKDTree(pts).query_pairs(eps, output_type="ndarray")
    drop = np.zeros(len(pts), dtype=bool)
    for i, j in sorted(map(tuple, pairs)):
        if not drop[i]:
            drop[j] = True
    return np.flatnonzero(~drop)


def check_distinct(pts: np.ndarray, eps: float) -> None:
    if len(dedup_points(pts, eps)) != len(pts):
        raise DegenerateInput(f"two generators coincide within {eps:g}")


def save_pattern(pattern: PointPattern, path: str | Path) -> None:
    """Write ``x,y,z`` lines to ``path`` and the model sidecar to ``path.json``."""
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y, z in pattern.points:
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(z))])
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(pattern.sidecar(), indent=2, sort_keys=True) + "\n")


def load_pattern(path: str | Path) -> PointPattern:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    pts = np.array(rows, dtype=float).reshape(-1, 3)
    return PointPattern(pts, Cuboid(*meta["cuboid"]), meta["model"], meta.get("seed"), meta.get("info", {}))
