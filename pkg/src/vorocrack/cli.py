"""Command line interface.

Exit codes: 0 success, 2 config error, 3 infeasible or solver limit, 4 IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, VoroCrackError

log = logging.getLogger("vorocrack")


def _cuboid(args):
    from .points import Cuboid

    return Cuboid(*map(float, args.cuboid))


def cmd_sample(args) -> int:
    from .points import sample_from_model, save_pattern

    model = {"type": args.model}
    if args.model in ("poisson", "hardcore"):
        model["lambda"] = args.intensity
    if args.model == "hardcore":
        model["volume_fraction"] = args.volume_fraction
        model["boundary"] = args.hardcore_boundary
    if args.model == "matern":
        model.update(lambda_parent=args.intensity, mu_daughter=args.mu, r=args.radius)
    pattern = sample_from_model(model, _cuboid(args), args.seed)
    save_pattern(pattern, args.output)
    print(f"{len(pattern)} points -> {args.output}")
    return 0


def cmd_voronoi(args) -> int:
    from .complex import assign_weights, extract_complex, save_complex
    from .points import load_pattern
    from .voronoi import build_bounded_voronoi

    pattern = load_pattern(args.points)
    cells = build_bounded_voronoi(pattern, eps=args.eps, threads=args.threads)
    k = assign_weights(extract_complex(cells, pattern.cuboid, args.eps), args.arc_weights, args.facet_weights)
    save_complex(k, args.output)
    print(f"V={k.n_vertices} E={k.n_arcs} F={k.n_facets} C={k.n_cells} chi={k.euler_characteristic()} -> {args.output}")
    return 0


def cmd_cycle(args) -> int:
    from .complex import load_complex
    from .paths import boundary_cycle, save_cycle

    k = load_complex(args.complex)
    h = boundary_cycle(k, args.heights)
    save_cycle(h, args.output)
    print(f"cycle with {len(h.arcs)} arcs, anchors {h.anchors} -> {args.output}")
    return 0


def cmd_minsurf(args) -> int:
    from .complex import load_complex
    from .ipsolve import dump_program
    from .mesh import save_surface_facets, surface_obj, write_obj
    from .minsurf import min_weight_surface, msp_as_ip
    from .paths import load_cycle

    k = load_complex(args.complex)
    h = load_cycle(args.cycle)
    if args.dump_lp:
        dump_program(msp_as_ip(k, h), args.dump_lp)
    s = min_weight_surface(k, h, max_nodes=args.max_nodes)
    save_surface_facets(s, args.output)
    if args.obj:
        write_obj(args.obj, surface_obj(k, s))
    print(json.dumps(s.stats, sort_keys=True))
    return 0


def cmd_raster(args) -> int:
    from .complex import load_complex
    from .mesh import load_surface_facets
    from .minsurf import surface_generator_pairs
    from .raster import adaptive_dilate, apply_microstructure, median_filter_binary, rasterize_labels, rasterize_surface
    from .volume import save_volume

    k = load_complex(args.complex)
    s = load_surface_facets(args.surface)
    dims = tuple(args.dims) if args.dims else tuple(int(round(d)) for d in k.cuboid.extents)
    labels = rasterize_labels(k.generators, dims, k.cuboid)
    j = rasterize_surface(labels, surface_generator_pairs(k, s))
    if args.p > 0:
        j = adaptive_dilate(j, args.p, args.dilation_seed)
    if args.fine_lambda:
        j = apply_microstructure(j, args.fine_lambda, args.micro_seed, k.cuboid)
    if args.median_radius:
        j = median_filter_binary(j, args.median_radius)
    save_volume(args.output, j, "binary")
    if args.labels:
        save_volume(args.labels, labels, "label")
    print(f"{int(j.sum())} foreground voxels -> {args.output}")
    return 0


def cmd_embed(args) -> int:
    from .embed import GrayStats, embed_crack, estimate_pore_stats, synthetic_background, threshold_pores
    from .volume import load_volume, save_volume

    gt, _ = load_volume(args.ground_truth)
    if args.patch:
        patch, _ = load_volume(args.patch)
    else:
        patch = synthetic_background(gt.shape, args.background[0], args.background[1], args.background_seed)
    if args.pore_threshold is not None:
        stats = estimate_pore_stats(patch, threshold_pores(patch, args.pore_threshold))
    elif args.crack_stats:
        stats = GrayStats(args.crack_stats[0], args.crack_stats[1])
    else:
        raise ConfigError("give --pore-threshold or --crack-stats")
    img = embed_crack(patch, gt, stats, args.sigma, args.seed)
    save_volume(args.output, img, "gray", gray_mean=stats.mean, gray_std=stats.std, gray_source=stats.source)
    print(f"crack grayvalues N({stats.mean:.1f}, {stats.std:.1f}^2) -> {args.output}")
    return 0


def _pipeline_config(args) -> dict:
    from .pipeline import apply_override, load_config

    cfg = load_config(args.config) if args.config else {}
    for item in args.set or []:
        apply_override(cfg, item)
    if args.output:
        cfg["output"] = args.output
    if getattr(args, "threads", None):
        cfg["threads"] = args.threads
    if getattr(args, "keep_intermediates", False):
        cfg["keep_intermediates"] = True
    if getattr(args, "no_figures", False):
        cfg["figures"] = False
    return cfg


def _bump_seeds(cfg: dict, offset: int) -> dict:
    import copy

    cfg = copy.deepcopy(cfg)
    for section in cfg.values():
        if isinstance(section, dict):
            for key in list(section):
                if key.endswith("seed") and isinstance(section[key], int):
                    section[key] += offset
    return cfg


def cmd_pipeline(args) -> int:
    from .pipeline import DEFAULT_CONFIG, resolve_config, run_pipeline

    cfg = resolve_config(_pipeline_config(args))
    base_out = Path(cfg.get("output") or DEFAULT_CONFIG["output"])
    for i in range(args.repeat):
        run_cfg = cfg
        if args.repeat > 1:
            run_cfg = _bump_seeds(cfg, i)
            run_cfg["output"] = str(base_out / f"run_{i:03d}")
        res = run_pipeline(run_cfg)
        surf = res.provenance["surface"]
        print(
            f"{run_cfg['output']}: {res.provenance['points']['count']} generators, "
            f"surface {surf['n_facets']} facets weight {surf['weight']:g}, "
            f"{res.provenance['voxels']['ground_truth']} crack voxels"
        )
    return 0


def cmd_export(args) -> int:
    from .pipeline import export_figure_assets, grid_configs

    cfg = _pipeline_config(args)
    out = Path(cfg.get("output") or "vorocrack_export")
    if args.grid:
        for name, sub in grid_configs():
            report = export_figure_assets(sub, out / name, figures=not args.no_figures)
            print(f"{name}: {report['facets']} facets, objective {report['objective']:g}")
        return 0
    report = export_figure_assets(cfg, out, figures=not args.no_figures)
    print(json.dumps({k: v for k, v in report.items() if k != "surface"}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vorocrack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample a generator point pattern")
    s.add_argument("--model", choices=["poisson", "matern", "hardcore"], default="poisson")
    s.add_argument("--intensity", "--lambda", type=float, default=500.0, dest="intensity",
                   help="intensity (parent intensity for matern)")
    s.add_argument("--mu", type=float, default=50.0, help="mean daughters per cluster")
    s.add_argument("--radius", type=float, default=0.1, help="cluster radius")
    s.add_argument("--volume-fraction", type=float, default=0.6)
    s.add_argument("--hardcore-boundary", choices=["free", "periodic", "contained"], default="free")
    s.add_argument("--cuboid", type=float, nargs=3, default=[1.0, 1.0, 1.0])
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("voronoi", help="bounded Voronoi diagram -> cell complex")
    s.add_argument("points")
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--arc-weights", choices=["unit", "length"], default="unit")
    s.add_argument("--facet-weights", choices=["unit", "area"], default="unit")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_voronoi)

    s = sub.add_parser("cycle", help="boundary cycle through the four vertical edges")
    s.add_argument("complex")
    s.add_argument("--heights", type=float, nargs=4, default=[0.5] * 4)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_cycle)

    s = sub.add_parser("minsurf", help="minimum-weight surface bounded by a cycle")
    s.add_argument("complex")
    s.add_argument("cycle")
    s.add_argument("--max-nodes", type=int, default=100_000)
    s.add_argument("--dump-lp", help="also write the binary program in LP format")
    s.add_argument("--obj", help="also write the surface as an OBJ mesh")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_minsurf)

    s = sub.add_parser("raster", help="discretize a surface and shape the crack")
    s.add_argument("complex")
    s.add_argument("surface")
    s.add_argument("--dims", type=int, nargs=3)
    s.add_argument("--p", type=float, default=0.0, help="dilation walk probability")
    s.add_argument("--dilation-seed", type=int, default=0)
    s.add_argument("--fine-lambda", type=float, default=0.0)
    s.add_argument("--micro-seed", type=int, default=0)
    s.add_argument("--median-radius", type=int, default=0)
    s.add_argument("--labels", help="also write the label volume")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_raster)

    s = sub.add_parser("embed", help="embed a ground truth into a grayscale patch")
    s.add_argument("ground_truth")
    s.add_argument("--patch")
    s.add_argument("--background", type=float, nargs=2, default=[30000.0, 1500.0], metavar=("MEAN", "STD"))
    s.add_argument("--background-seed", type=int, default=0)
    s.add_argument("--pore-threshold", type=float)
    s.add_argument("--crack-stats", type=float, nargs=2, metavar=("MEAN", "STD"))
    s.add_argument("--sigma", type=float, default=0.7)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_embed)

    for name, func, helptext in (
        ("pipeline", cmd_pipeline, "run every stage from a JSON config"),
        ("export", cmd_export, "write diagram/cycle/surface meshes and figures"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", nargs="?")
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        s.add_argument("-o", "--output")
        s.add_argument("--threads", type=int)
        s.add_argument("--no-figures", action="store_true")
        s.set_defaults(func=func)
        if name == "pipeline":
            s.add_argument("--keep-intermediates", action="store_true")
            s.add_argument("--repeat", type=int, default=1)
        else:
            s.add_argument("--grid", action="store_true", help="export the 12-setting point-process grid")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VoroCrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
