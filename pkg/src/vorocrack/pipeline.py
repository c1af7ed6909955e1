"""End-to-end crack synthesis driven by a single JSON config.

Stage order: sample -> voronoi -> complex -> weights -> cycle -> minsurf ->
rasterize -> dilate -> microstructure -> branch union -> median -> embed.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .complex import CellComplex, assign_weights, extract_complex, save_complex
from .embed import GrayStats, embed_crack, estimate_pore_stats, synthetic_background, threshold_pores
from .errors import ConfigError, StageError, VoroCrackError
from .ipsolve import dump_program
from .mesh import cycle_obj, diagram_obj, save_surface_facets, surface_obj, wireframe_obj, write_obj
from .minsurf import Surface, min_weight_surface, msp_as_ip, surface_generator_pairs
from .paths import Cycle, boundary_cycle, save_cycle
from .points import Cuboid, PointPattern, sample_from_model, save_pattern
from .raster import (
    adaptive_dilate,
    apply_microstructure,
    median_filter_binary,
    rasterize_labels,
    rasterize_surface,
    union_branching,
)
from .volume import load_volume, save_volume
from .voronoi import build_bounded_voronoi

log = logging.getLogger(__name__)

DEFAULT_CONFIG: dict[str, Any] = {
    "cuboid": [64.0, 64.0, 64.0],
    "dims": None,
    "points": {"type": "poisson", "lambda": 500 / 64.0**3, "seed": 1},
    "eps": None,
    "weights": {"arc": "length", "facet": "area", "boundary_factor": 1.0},
    "cycle": {"heights": [0.5, 0.5, 0.5, 0.5]},
    "branch": None,
    "dilation": {"p": 0.02, "seed": 2},
    "microstructure": {"lambda": 0.1, "seed": 3},
    "median": {"radius": 1, "order": "last"},
    "embed": {
        "source": "synthetic",
        "background_mean": 30000.0,
        "background_std": 1500.0,
        "background_seed": 4,
        "crack_mean": 8000.0,
        "crack_std": 1000.0,
        "sigma": 0.7,
        "seed": 5,
    },
    "output": "vorocrack_out",
    "keep_intermediates": False,
    "figures": True,
    "threads": 1,
    "max_nodes": 100_000,
}


# settings that never change the outputs; kept out of provenance
_RUNTIME_KEYS = ("output", "threads")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve_config(cfg: dict[str, Any] | None = None) -> dict[str, Any]:
    """Fill defaults and validate; the result is what provenance records."""
    cfg = _merge(DEFAULT_CONFIG, cfg or {})
    unknown = set(cfg) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if len(cfg["cuboid"]) != 3:
        raise ConfigError("cuboid needs three extents")
    Cuboid(*map(float, cfg["cuboid"]))
    if cfg["dims"] is None:
        cfg["dims"] = [int(round(float(d))) for d in cfg["cuboid"]]
    if len(cfg["dims"]) != 3 or min(cfg["dims"]) < 1:
        raise ConfigError("dims needs three positive voxel counts")
    if not float(cfg["weights"].get("boundary_factor", 1.0)) > 0:
        raise ConfigError("weights.boundary_factor must be positive")
    if cfg["points"].get("type") != "explicit" and "seed" not in cfg["points"]:
        raise ConfigError("points.seed is required")
    if cfg["median"] is not None and cfg["median"].get("order", "last") not in ("last", "before_union"):
        raise ConfigError("median.order must be 'last' or 'before_union'")
    if cfg["embed"] is not None and cfg["embed"].get("source") not in ("synthetic", "patch"):
        raise ConfigError("embed.source must be 'synthetic' or 'patch'")
    return cfg


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return raw


def apply_override(cfg: dict[str, Any], assignment: str) -> dict[str, Any]:
    """Apply ``dotted.key=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value")
    key, raw = assignment.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = val
    return cfg


@dataclass
class MacroResult:
    pattern: PointPattern
    complex: CellComplex
    cycle: Cycle
    surface: Surface
    branch_cycle: Cycle | None = None
    branch_surface: Surface | None = None


@dataclass
class PipelineResult:
    gt: np.ndarray
    image: np.ndarray | None
    labels: np.ndarray
    macro: MacroResult
    provenance: dict[str, Any]
    files: dict[str, Path] = field(default_factory=dict)


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except VoroCrackError as exc:
        raise StageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    log.info("stage %-14s %.3f s", name, timings[name])


def run_macro(cfg: dict[str, Any], timings: dict[str, float] | None = None, min_generators: int = 2) -> MacroResult:
    """Point pattern through minimum-weight surface(s).

    The full pipeline needs at least two generators; mesh export also accepts a
    single cell.
    """
    cfg = resolve_config(cfg)
    timings = {} if timings is None else timings
    q = Cuboid(*map(float, cfg["cuboid"]))
    with _stage("sample", timings):
        pattern = sample_from_model(cfg["points"], q, cfg["points"].get("seed"))
        if len(pattern) < min_generators:
            raise ConfigError(
                f"the point process produced {len(pattern)} generators; at least {min_generators} are required"
            )
    with _stage("voronoi", timings):
        cells = build_bounded_voronoi(pattern, q, eps=cfg["eps"], threads=int(cfg["threads"]))
    with _stage("complex", timings):
        k = extract_complex(cells, q, cfg["eps"])
    with _stage("weights", timings):
        k = assign_weights(k, cfg["weights"]["arc"], cfg["weights"]["facet"])
        factor = float(cfg["weights"].get("boundary_factor", 1.0))
        if factor != 1.0:
            k.facet_weights = np.where(k.facet_on_boundary, k.facet_weights * factor, k.facet_weights)
    with _stage("cycle", timings):
        h = boundary_cycle(k, cfg["cycle"]["heights"])
    with _stage("minsurf", timings):
        s = min_weight_surface(k, h, max_nodes=int(cfg["max_nodes"]))
    res = MacroResult(pattern, k, h, s)
    if cfg["branch"]:
        with _stage("branch_minsurf", timings):
            res.branch_cycle = boundary_cycle(k, cfg["branch"]["heights"])
            res.branch_surface = min_weight_surface(k, res.branch_cycle, max_nodes=int(cfg["max_nodes"]))
    return res


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _surface_record(s: Surface, h: Cycle) -> dict[str, Any]:
    return {
        "weight": s.weight,
        "cycle_anchors": h.anchors,
        "cycle_arcs": len(h.arcs),
        **s.stats,
    }


def run_pipeline(cfg: dict[str, Any] | None = None, write: bool = True) -> PipelineResult:
    """Run every stage; writes outputs and a provenance record when ``write``."""
    cfg = resolve_config(cfg)
    timings: dict[str, float] = {}
    macro = run_macro(cfg, timings)
    k, s = macro.complex, macro.surface
    q = k.cuboid
    dims = tuple(int(d) for d in cfg["dims"])
    if min(dims) < 8:
        log.warning("dims below 8 voxels per axis give degenerate rasters")

    with _stage("rasterize", timings):
        labels = rasterize_labels(k.generators, dims, q)
        pairs = surface_generator_pairs(k, s)
        if not pairs:
            log.warning("surface uses boundary facets only; the ground truth will be empty")
        raw = rasterize_surface(labels, pairs)
    with _stage("dilate", timings):
        dil = cfg["dilation"]
        dilated = adaptive_dilate(raw, dil["p"], dil["seed"]) if dil else raw
    with _stage("microstructure", timings):
        mic = cfg["microstructure"]
        rough = apply_microstructure(dilated, mic["lambda"], mic["seed"], q) if mic else dilated
    med = cfg["median"]
    gt = rough
    if med and med.get("order", "last") == "before_union":
        gt = median_filter_binary(gt, int(med["radius"]))
    branch_raw = None
    if macro.branch_surface is not None:
        with _stage("branch", timings):
            branch_raw = rasterize_surface(labels, surface_generator_pairs(k, macro.branch_surface))
            if cfg["branch"].get("dilate", False) and dil:
                branch_raw = adaptive_dilate(branch_raw, dil["p"], dil["seed"])
            gt = union_branching(gt, branch_raw)
    if med and med.get("order", "last") == "last":
        with _stage("median", timings):
            gt = median_filter_binary(gt, int(med["radius"]))

    image = None
    stats = None
    emb = cfg["embed"]
    if emb:
        with _stage("embed", timings):
            if emb["source"] == "synthetic":
                patch = synthetic_background(dims, emb["background_mean"], emb["background_std"], emb["background_seed"])
                stats = GrayStats(float(emb["crack_mean"]), float(emb["crack_std"]), "manual")
            else:
                patch, _ = load_volume(emb["path"])
                if patch.shape != dims:
                    raise ConfigError(f"patch shape {patch.shape} does not match dims {dims}")
                if "pore_mask" in emb:
                    mask, _ = load_volume(emb["pore_mask"])
                    stats = estimate_pore_stats(patch, mask)
                elif "pore_threshold" in emb:
                    stats = estimate_pore_stats(patch, threshold_pores(patch, emb["pore_threshold"]))
                else:
                    stats = GrayStats(float(emb["crack_mean"]), float(emb["crack_std"]), "manual")
            image = embed_crack(patch, gt, stats, float(emb.get("sigma", 0.7)), emb["seed"])

    provenance: dict[str, Any] = {
        "version": __version__,
        "config": {key: val for key, val in cfg.items() if key not in _RUNTIME_KEYS},
        "points": {"count": len(macro.pattern), **macro.pattern.info},
        "complex": {
            "vertices": k.n_vertices,
            "arcs": k.n_arcs,
            "facets": k.n_facets,
            "cells": k.n_cells,
            "euler_characteristic": k.euler_characteristic(),
        },
        "surface": _surface_record(s, macro.cycle),
        "branch_surface": _surface_record(macro.branch_surface, macro.branch_cycle) if macro.branch_surface else None,
        "voxels": {
            "raster": int(raw.sum()),
            "dilated": int(dilated.sum()),
            "microstructure": int(rough.sum()),
            "branch": int(branch_raw.sum()) if branch_raw is not None else None,
            "ground_truth": int(gt.sum()),
        },
        "gray_stats": None if stats is None else {"mean": stats.mean, "std": stats.std, "source": stats.source},
    }
    result = PipelineResult(gt, image, labels, macro, provenance)
    if write:
        _write_outputs(cfg, result, raw, dilated, rough)
    log.info("timings: %s", {k_: round(v, 3) for k_, v in timings.items()})
    return result


def _write_outputs(cfg, result: PipelineResult, raw, dilated, rough) -> None:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    macro = result.macro
    k = macro.complex
    files: dict[str, Path] = {}

    def vol(name, data, flavor):
        path = out / f"{name}.raw"
        save_volume(path, data, flavor, stage=name)
        files[name] = path

    vol("ground_truth", result.gt, "binary")
    if result.image is not None:
        vol("crack_image", result.image, "gray")
    files["surface_obj"] = out / "surface.obj"
    write_obj(files["surface_obj"], surface_obj(k, macro.surface))
    files["surface_facets"] = out / "surface.facets"
    save_surface_facets(macro.surface, files["surface_facets"])
    if macro.branch_surface is not None:
        files["branch_surface_obj"] = out / "branch_surface.obj"
        write_obj(files["branch_surface_obj"], surface_obj(k, macro.branch_surface, "branch_surface"))
    if cfg["keep_intermediates"]:
        inter = out / "intermediates"
        inter.mkdir(exist_ok=True)
        save_pattern(macro.pattern, inter / "points.csv")
        save_complex(k, inter / "complex.txt")
        save_cycle(macro.cycle, inter / "cycle.json")
        dump_program(msp_as_ip(k, macro.cycle), inter / "program.lp")
        for name, data, flavor in (
            ("labels", result.labels, "label"),
            ("surface_raster", raw, "binary"),
            ("dilated", dilated, "binary"),
            ("microstructure", rough, "binary"),
        ):
            save_volume(inter / f"{name}.raw", data, flavor)
        write_obj(inter / "diagram.obj", diagram_obj(k))
        write_obj(inter / "wireframe.obj", wireframe_obj(k))
        write_obj(inter / "cycle.obj", cycle_obj(k, macro.cycle))
    if cfg["figures"]:
        from .plotting import plot_slices, plot_surface_generation

        figs = out / "figures"
        figs.mkdir(exist_ok=True)
        plot_surface_generation(k, macro.cycle, macro.surface, figs / "surface_generation.png", macro.branch_surface)
        plot_slices(result.labels, result.gt, result.image, figs / "slices.png")
    result.provenance["files"] = {name: {"path": p.name, "sha256": _sha256(p)} for name, p in sorted(files.items())}
    result.files = files
    prov_path = out / "provenance.json"
    prov_path.write_text(json.dumps(result.provenance, indent=2, sort_keys=True, default=_jsonable) + "\n")
    result.files["provenance"] = prov_path


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def facet_statistics_rows(k: CellComplex, s: Surface) -> list[dict[str, Any]]:
    areas = k.facet_areas()
    return [
        {
            "facet": int(f),
            "sign": int(sg),
            "area": float(areas[f]),
            "weight": float(k.facet_weights[f]),
            "cell_a": int(k.facet_cells[f, 0]),
            "cell_b": int(k.facet_cells[f, 1]),
        }
        for f, sg in zip(s.facets, s.signs)
    ]


def export_figure_assets(cfg: dict[str, Any], outdir: str | Path | None = None, figures: bool = True) -> dict[str, Any]:
    """Meshes of the diagram, cycle and surface(s), a facet CSV, and figures."""
    cfg = resolve_config(cfg)
    out = Path(outdir or cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    macro = run_macro(cfg, min_generators=1)
    k = macro.complex
    write_obj(out / "diagram.obj", diagram_obj(k))
    write_obj(out / "wireframe.obj", wireframe_obj(k))
    write_obj(out / "cycle.obj", cycle_obj(k, macro.cycle))
    write_obj(out / "surface.obj", surface_obj(k, macro.surface))
    rows = facet_statistics_rows(k, macro.surface)
    report: dict[str, Any] = {
        "facets": int(len(macro.surface.facets)),
        "objective": macro.surface.weight,
        "surface": macro.surface.stats,
    }
    if macro.branch_surface is not None:
        write_obj(out / "surface2.obj", surface_obj(k, macro.branch_surface, "branch_surface"))
        write_obj(out / "cycle2.obj", cycle_obj(k, macro.branch_cycle))
        shared = sorted(set(map(int, macro.surface.facets)) & set(map(int, macro.branch_surface.facets)))
        report["shared_facets"] = shared
        rows += [dict(r, surface=2) for r in facet_statistics_rows(k, macro.branch_surface)]
    with open(out / "surface_facets.csv", "w", newline="") as fh:
        fields = ["facet", "sign", "area", "weight", "cell_a", "cell_b", "surface"]
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({"surface": 1, **r})
    if figures:
        from .plotting import plot_facet_areas, plot_surface_generation

        plot_surface_generation(k, macro.cycle, macro.surface, out / "surface_generation.png", macro.branch_surface)
        plot_facet_areas({"surface": np.array([r["area"] for r in rows])}, out / "facet_areas.png")
    (out / "export.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return report


def grid_configs() -> list[tuple[str, dict[str, Any]]]:
    """The 12 point-process settings of the facet-shape comparison grid.

    Unit cube, arcs weighted by length, facets by area.
    """
    rows = [
        (50, (2, 50), 50),
        (100, (5, 100), 100),
        (1000, (20, 50), 1000),
        (5000, (50, 100), 5000),
    ]
    base = {"cuboid": [1.0, 1.0, 1.0], "dims": [64, 64, 64], "weights": {"arc": "length", "facet": "area"}}
    out = []
    for i, (lam_p, (lam_m, mu), lam_h) in enumerate(rows):
        out.append((f"poisson_{lam_p}", _merge(base, {"points": {"type": "poisson", "lambda": lam_p, "seed": i}})))
        out.append((
            f"matern_{lam_m}_{mu}",
            _merge(base, {"points": {"type": "matern", "lambda_parent": lam_m, "mu_daughter": mu, "r": 0.1, "seed": i}}),
        ))
        out.append((
            f"hardcore_{lam_h}",
            _merge(base, {"points": {"type": "hardcore", "lambda": lam_h, "volume_fraction": 0.6, "seed": i}}),
        ))
    return out
