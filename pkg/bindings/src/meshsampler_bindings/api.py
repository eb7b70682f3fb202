"""Array-level entry points over the meshsampler command-line pipeline.

Every call shells out to the `meshsampler` executable and exchanges data
through its documented file formats, so results are byte-identical to
driving the CLI by hand with the same inputs and seeds. Errors from the
pipeline surface as BindingError with the CLI's own diagnostics.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats


class BindingError(RuntimeError):
    pass


def _cli_command():
    exe = shutil.which("meshsampler")
    if exe:
        return [exe]
    return [sys.executable, "-m", "meshsampler.cli"]


def _run(args):
    proc = subprocess.run(_cli_command() + [str(a) for a in args],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        detail = proc.stderr.strip() or proc.stdout.strip()
        raise BindingError(f"meshsampler exited with {proc.returncode}: {detail}")
    return proc.stdout


@dataclass
class BoundCloud:
    """Point-cloud channels as plain contiguous arrays."""
    positions: np.ndarray                    # (n, 3) float64
    face_index: np.ndarray                   # (n,) uint32
    colors: np.ndarray | None = None         # (n, 3) uint8
    normals: np.ndarray | None = None        # (n, 3) float64
    elevations: np.ndarray | None = None     # (n,) float32
    labels: np.ndarray | None = None         # (n,) int32
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __len__(self):
        return len(self.positions)

    def write(self, path):
        formats.write_point_cloud(
            path, self.positions, self.face_index, colors=self.colors,
            normals=self.normals, elevations=self.elevations,
            labels=self.labels, origin=self.origin)


def _load_bound(path) -> BoundCloud:
    data = formats.read_point_cloud(path)
    return BoundCloud(data["positions"],
                      data.get("face_index", np.zeros(len(data["positions"]), np.uint32)),
                      colors=data.get("colors"), normals=data.get("normals"),
                      elevations=data.get("elevations"), labels=data.get("labels"),
                      origin=data["origin"])


def sample_mesh(mesh_path, method="poisson", radius=None, scale=None, seed=0,
                oversample=20.0, normals="none", elevation_radius=None,
                elevation_cell=1.0, subsample_grid=None, no_color=False,
                label_property="label", class_count=7) -> BoundCloud:
    """Sample a feature-rich point cloud from a textured mesh file."""
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "cloud.ply"
        args = ["sample", mesh_path, out, "--method", method, "--seed", seed,
                "--oversample", oversample, "--normals", normals,
                "--label-property", label_property, "--class-count", class_count]
        if radius is not None:
            args += ["--radius", radius]
        if scale is not None:
            args += ["--scale", scale]
        if elevation_radius is not None:
            args += ["--elevation-radius", elevation_radius,
                     "--elevation-cell", elevation_cell]
        if subsample_grid is not None:
            args += ["--subsample-grid", subsample_grid]
        if no_color:
            args += ["--no-color"]
        _run(args)
        return _load_bound(out)


def draw_subsets(cloud: BoundCloud, k, n_subsets, seed=0):
    """Class-balanced training subsets; returns (centers, members) index arrays."""
    with tempfile.TemporaryDirectory() as tmp:
        cloud_path = Path(tmp) / "cloud.ply"
        out = Path(tmp) / "train.sub"
        cloud.write(cloud_path)
        _run(["subsets", cloud_path, out, "--k", k, "--n", n_subsets,
              "--mode", "train", "--seed", seed])
        return formats.read_subsets(out)


def tile(cloud: BoundCloud, k):
    """Overlapping inference tiles covering every point; (centers, members)."""
    with tempfile.TemporaryDirectory() as tmp:
        cloud_path = Path(tmp) / "cloud.ply"
        out = Path(tmp) / "tiles.sub"
        cloud.write(cloud_path)
        _run(["subsets", cloud_path, out, "--k", k, "--mode", "tile"])
        return formats.read_subsets(out)


def merge_and_backproject(mesh_path, cloud: BoundCloud, tiles, logits,
                          label_property="label", class_count=7):
    """Merge per-tile logits, label mesh faces, and score against ground truth.

    tiles is the (centers, members) pair from tile(); logits is float32 of
    shape (n_tiles * k, C) or (n_tiles, k, C), rows aligned with member
    order. Returns (face_labels, metrics) where metrics maps names like
    "oa", "miou", "iou_1" to floats.
    """
    centers, members = tiles
    rows = np.asarray(logits, np.float32).reshape(-1, np.shape(logits)[-1])
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cloud_path, tiles_path = tmp / "cloud.ply", tmp / "tiles.sub"
        logits_path, out_path = tmp / "pred.lgt", tmp / "labeled.ply"
        report_path = tmp / "metrics.txt"
        cloud.write(cloud_path)
        formats.write_subsets(tiles_path, centers, members)
        formats.write_logits(logits_path, rows, per_face=False)
        _run(["backproject", mesh_path, cloud_path, tiles_path, logits_path,
              out_path, "--gt", "--report", report_path,
              "--label-property", label_property, "--class-count", class_count])
        face_labels = formats.read_face_labels(out_path)
        metrics = {}
        for line in report_path.read_text().splitlines():
            name, _, value = line.partition("=")
            if value:
                metrics[name] = float(value)
        return face_labels, metrics
