"""Per-point features: normals from the source mesh, elevation above local ground."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import geometry
from .core import PointCloud, TexturedMesh
from .grid import UniformGrid3D

log = logging.getLogger(__name__)


@dataclass
class ElevationParams:
    """Horizontal neighborhood radius and accumulation cell for the ground minimum."""
    radius: float = 20.0
    cell: float = 1.0

    def __post_init__(self):
        if self.radius <= 0 or self.cell <= 0:
            raise ValueError("radius and cell must be positive")
        if self.cell > self.radius:
            raise ValueError("cell must not exceed radius")


def attach_normals(cloud: PointCloud, mesh: TexturedMesh, kind: str = "face") -> PointCloud:
    """Attach unit normals, either constant per source face or interpolated.

    kind="face" copies the source face normal (discontinuous between faces);
    kind="interpolated" blends the area-weighted vertex normals by inverse
    distance, which is continuous across shared edges.
    Points on degenerate faces inherit the nearest non-degenerate face's
    normal (by centroid distance).
    """
    if kind not in ("face", "interpolated"):
        raise ValueError(f"unknown normal kind {kind!r}")
    fnormals = geometry.face_normals(mesh)
    degenerate = np.linalg.norm(fnormals, axis=1) == 0
    faces = np.asarray(cloud.face_index, np.int64)

    if kind == "face":
        normals = fnormals[faces].copy()
    else:
        vnormals = geometry.vertex_normals(mesh)
        normals = geometry.interpolated_normals(mesh, faces, cloud.positions, vnormals)

    on_degenerate = degenerate[faces]
    if on_degenerate.any():
        ok_faces = np.nonzero(~degenerate)[0]
        if not len(ok_faces):
            raise ValueError("all faces are degenerate")
        centroids = mesh.vertices[mesh.face_vertices[ok_faces]].mean(axis=1)
        index = UniformGrid3D(centroids, _spacing_hint(centroids))
        for i in np.nonzero(on_degenerate)[0]:
            nearest = ok_faces[index.knn(cloud.positions[i], 1)[0]]
            normals[i] = fnormals[nearest]
        log.warning("attach_normals: %d points on degenerate faces used nearest-face fallback",
                    int(on_degenerate.sum()))
    return cloud.with_channels(normals=normals)


def _spacing_hint(points: np.ndarray) -> float:
    extent = np.ptp(points, axis=0).max()
    return max(extent / max(len(points) ** (1 / 3), 1.0), 1e-6) * 4


def attach_elevation(cloud: PointCloud, params: ElevationParams | None = None) -> PointCloud:
    """Elevation = z minus the minimum z in a horizontal disk of the given radius.

    The minimum is taken over a grid of per-cell z minima; a cell participates
    when its center lies within the radius of the query point, and the point's
    own cell always participates, so elevations are non-negative.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    params = params or ElevationParams()
    cell, radius = params.cell, params.radius
    xy = cloud.positions[:, :2]
    z = cloud.positions[:, 2]
    lo = xy.min(axis=0)
    keys = np.floor((xy - lo) / cell).astype(np.int64)
    nx, ny = keys.max(axis=0) + 1

    minima = np.full((nx, ny), np.inf)
    np.minimum.at(minima, (keys[:, 0], keys[:, 1]), z)

    reach = int(np.ceil(radius / cell)) + 1
    offsets = np.stack(np.meshgrid(np.arange(-reach, reach + 1),
                                   np.arange(-reach, reach + 1), indexing="ij"), axis=-1).reshape(-1, 2)

    ground = np.full(len(cloud), np.inf)
    # Per-point cell stencil; vectorized over points, looped over offsets.
    for off in offsets:
        cx = keys[:, 0] + off[0]
        cy = keys[:, 1] + off[1]
        valid = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        if not valid.any():
            continue
        center = (np.column_stack([cx, cy]) + 0.5) * cell + lo
        within = ((center - xy) ** 2).sum(axis=1) <= radius * radius
        use = valid & (within | ((off[0] == 0) & (off[1] == 0)))
        if not use.any():
            continue
        ground[use] = np.minimum(ground[use], minima[cx[use], cy[use]])

    return cloud.with_channels(elevations=(z - ground).astype(np.float64))
