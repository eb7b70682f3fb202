"""Command-line pipeline: sample, subsets, backproject, stats.

Every command writes a plain-text key-value manifest next to its main
output; re-running with the recorded parameters reproduces the output
bit-exactly (seeds default to fixed constants, never to the clock).

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 validation failure,
5 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__, features, geometry, io, labels, sampling, subsets
from .core import PointCloud

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_INTERNAL = 5


class UsageError(Exception):
    pass


def _write_manifest(out_path, command, args_dict, inputs, outputs, seed, wall_time):
    lines = [f"command={command}", f"version={__version__}"]
    for key, value in sorted(args_dict.items()):
        lines.append(f"arg_{key}={value}")
    for i, p in enumerate(inputs):
        lines.append(f"input_{i}={p}")
    for i, p in enumerate(outputs):
        lines.append(f"output_{i}={p}")
    lines.append(f"seed={seed}")
    lines.append(f"wall_time_s={wall_time:.3f}")
    with open(str(out_path) + ".manifest", "w") as f:
        f.write("\n".join(lines) + "\n")


def _footprint_area(positions):
    from scipy.spatial import ConvexHull, QhullError
    try:
        return ConvexHull(positions[:, :2]).volume   # 2D hull: volume is the area
    except (QhullError, ValueError):
        span = np.ptp(positions[:, :2], axis=0)
        return float(span[0] * span[1])


def _channel_summary(cloud: PointCloud) -> str:
    present = [name for name in ("colors", "normals", "elevations", "labels")
               if getattr(cloud, name) is not None]
    return f"{len(cloud)} points, channels: positions, face_index" + \
        ("".join(", " + p for p in present))


def cmd_sample(args) -> int:
    if args.method == "texel":
        if args.scale is None:
            raise UsageError("--method texel requires --scale")
        if args.radius is not None:
            raise UsageError("--radius conflicts with --method texel")
    else:
        if args.radius is None:
            raise UsageError("--method poisson requires --radius")
        if args.scale is not None:
            raise UsageError("--scale conflicts with --method poisson")

    start = time.monotonic()
    mesh = io.load_mesh(args.mesh, label_property_name=args.label_property,
                        class_count=args.class_count)
    if args.method == "texel":
        if not (mesh.face_tex >= 0).any():
            raise ValueError("texel sampling requires a textured mesh")
        cloud = sampling.texel_sample(mesh, sampling.TexelParams(args.scale))
    else:
        cloud = sampling.poisson_disk_sample(
            mesh, sampling.PoissonParams(args.radius, oversample=args.oversample,
                                         seed=args.seed))
    if args.normals != "none":
        kind = "interpolated" if args.normals == "interp" else "face"
        cloud = features.attach_normals(cloud, mesh, kind=kind)
    if args.elevation_radius is not None:
        cloud = features.attach_elevation(
            cloud, features.ElevationParams(args.elevation_radius, args.elevation_cell))
    if args.no_color:
        cloud = cloud.with_channels(colors=None)
    if args.subsample_grid is not None:
        cloud = sampling.grid_subsample(cloud, sampling.GridParams(args.subsample_grid,
                                                                   seed=args.seed))
    io.write_point_cloud(cloud, args.out)

    surface = geometry.face_areas(mesh).sum()
    footprint = _footprint_area(cloud.positions) if len(cloud) >= 3 else 0.0
    print(f"density: {len(cloud) / surface:.2f} pts per surface m^2"
          + (f", {len(cloud) / footprint:.2f} pts per footprint m^2" if footprint > 0 else ""))
    print(_channel_summary(cloud))
    _write_manifest(args.out, "sample", vars(args), [args.mesh], [args.out],
                    args.seed, time.monotonic() - start)
    return 0


def cmd_subsets(args) -> int:
    start = time.monotonic()
    cloud = io.load_point_cloud(args.cloud)
    if args.mode == "train":
        if cloud.labels is None or not (np.asarray(cloud.labels) >= 0).any():
            raise ValueError("train mode requires a labeled cloud")
        result = subsets.draw_training_subsets(
            cloud, subsets.SubsetParams(args.k, args.n, seed=args.seed))
        hist = np.bincount(np.asarray(cloud.labels)[result.centers.astype(np.int64)])
        print("center-class histogram:", hist.tolist())
    else:
        result = subsets.tile_for_inference(cloud, args.k)
        covered = np.zeros(len(cloud), bool)
        covered[result.members.ravel().astype(np.int64)] = True
        print(f"{len(result)} tiles, coverage {covered.mean():.1%}")
    io.write_subsets(result, args.out)
    _write_manifest(args.out, "subsets", vars(args), [args.cloud], [args.out],
                    args.seed, time.monotonic() - start)
    return 0


def cmd_backproject(args) -> int:
    start = time.monotonic()
    mesh = io.load_mesh(args.mesh, label_property_name=args.label_property,
                        class_count=args.class_count)
    cloud = io.load_point_cloud(args.cloud)
    tiles = io.load_subsets(args.tiles)
    table = io.load_logits(args.logits)
    if table.per_face:
        raise ValueError(f"{args.logits}: expected per-point logit blocks (alignment flag 0)")
    expected = len(tiles) * tiles.k
    if len(table) != expected:
        raise ValueError(f"{args.logits}: {len(table)} rows, expected "
                         f"{len(tiles)} tiles x k={tiles.k} = {expected}")
    merged = subsets.merge_tile_logits(tiles, table.rows, len(cloud))
    per_face = labels.face_logits(cloud, merged, mesh)
    pred = labels.predict_faces(per_face)
    io.write_labeled_mesh(mesh, pred, args.out)
    outputs = [args.out]
    if args.gt:
        cm = labels.confusion(pred, mesh)
        m = labels.metrics(cm)
        print(labels.format_metrics(m))
        if args.report:
            with open(args.report, "w") as f:
                f.write(labels.metrics_keyvalues(m))
            outputs.append(args.report)
    _write_manifest(args.out, "backproject", vars(args),
                    [args.mesh, args.cloud, args.tiles, args.logits], outputs,
                    0, time.monotonic() - start)
    return 0


def cmd_stats(args) -> int:
    mesh = io.load_mesh(args.mesh, label_property_name=args.label_property,
                        class_count=args.class_count)
    areas = geometry.class_area(mesh)
    total = areas.sum()
    print(f"vertices: {mesh.n_vertices}")
    print(f"faces:    {mesh.n_faces}")
    print(f"textures: {len(mesh.textures)}")
    print(f"surface:  {total:.3f} m^2")
    for c, area in enumerate(areas):
        if area > 0:
            print(f"class {c}: {area:.3f} m^2 ({100 * area / total:.1f}%)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meshsampler",
                                     description="Sample textured meshes into feature-rich "
                                                 "point clouds and project labels back.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("MESHSAMPLER_THREADS", "0")),
                        help="worker thread budget (0 = auto); output does not depend on it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_mesh_opts(p):
        p.add_argument("--label-property", default="label")
        p.add_argument("--class-count", type=int, default=7)

    p = sub.add_parser("sample", help="sample a point cloud from a textured mesh")
    p.add_argument("mesh")
    p.add_argument("out")
    p.add_argument("--method", choices=("texel", "poisson"), required=True)
    p.add_argument("--scale", type=float, help="texel scale s (texel method)")
    p.add_argument("--radius", type=float, help="minimum distance r (poisson method)")
    p.add_argument("--oversample", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normals", choices=("face", "interp", "none"), default="none")
    p.add_argument("--elevation-radius", type=float)
    p.add_argument("--elevation-cell", type=float, default=1.0)
    p.add_argument("--no-color", action="store_true")
    p.add_argument("--subsample-grid", type=float, help="grid step g for sub-sampling")
    common_mesh_opts(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("subsets", help="draw training subsets or inference tiles")
    p.add_argument("cloud")
    p.add_argument("out")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("train", "tile"), default="train")
    p.set_defaults(func=cmd_subsets)

    p = sub.add_parser("backproject", help="merge tile logits and label mesh faces")
    p.add_argument("mesh")
    p.add_argument("cloud")
    p.add_argument("tiles")
    p.add_argument("logits")
    p.add_argument("out")
    p.add_argument("--report", help="write name=value metrics to this file")
    p.add_argument("--gt", action="store_true", help="evaluate against ground-truth labels")
    common_mesh_opts(p)
    p.set_defaults(func=cmd_backproject)

    p = sub.add_parser("stats", help="class area distribution and mesh counts")
    p.add_argument("mesh")
    common_mesh_opts(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit:
        raise
    except Exception as exc:      # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
