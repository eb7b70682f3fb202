"""Point cloud generation: texel sampling, Poisson disk sampling, grid sub-sampling.

All samplers are deterministic for a given (mesh, params, seed): candidate
generation uses per-face substreams keyed on (seed, face index) and the
Poisson selection permutation depends on the seed alone, so the output does
not depend on how work is scheduled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .core import NO_LABEL, PointCloud, TexturedMesh

log = logging.getLogger(__name__)

BARY_TOL = 1e-9


@dataclass
class TexelParams:
    """s is the ratio of the retained texel size to the original size."""
    s: float = 1.0

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("scale s must be positive")


@dataclass
class PoissonParams:
    r: float                     # minimum inter-sample distance, meters
    oversample: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("radius r must be positive")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")


@dataclass
class GridParams:
    g: float                     # grid step, meters
    seed: int = 0

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("grid step g must be positive")


def texel_color(texture: np.ndarray, u, v) -> np.ndarray:
    """Nearest-texel RGB at UV (u, v); v=0 is the bottom image row."""
    h, w = texture.shape[:2]
    col = np.clip(np.floor(np.asarray(u) * w).astype(np.int64), 0, w - 1)
    row = h - 1 - np.clip(np.floor(np.asarray(v) * h).astype(np.int64), 0, h - 1)
    return texture[row, col]


def texel_color_bilinear(texture: np.ndarray, u, v) -> np.ndarray:
    """Bilinear RGB lookup between texel centers, clamped at chart borders."""
    h, w = texture.shape[:2]
    x = np.clip(np.asarray(u, np.float64) * w - 0.5, 0, w - 1)
    y = np.clip(np.asarray(v, np.float64) * h - 0.5, 0, h - 1)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    rows0, rows1 = h - 1 - y0, h - 1 - y1
    c = (texture[rows0, x0] * ((1 - fx) * (1 - fy))[..., None]
         + texture[rows0, x1] * (fx * (1 - fy))[..., None]
         + texture[rows1, x0] * ((1 - fx) * fy)[..., None]
         + texture[rows1, x1] * (fx * fy)[..., None])
    return np.clip(np.rint(c), 0, 255).astype(np.uint8)


def texel_sample(mesh: TexturedMesh, params: TexelParams,
                 bilinear: bool = False, report: dict | None = None) -> PointCloud:
    """One point per virtual texel center falling inside a face's UV triangle.

    The virtual grid is the face's texture scaled by 1/s: centers sit at
    pixel coordinates (i + 0.5) * s. A center shared between faces of the
    same texture (exact shared UV edge) is emitted once, for the lowest face
    index. Faces without a texture are skipped; faces with a degenerate UV
    triangle contribute a single fallback point at their 3D centroid.
    """
    s = params.s
    lookup = texel_color_bilinear if bilinear else texel_color
    claimed: dict[int, set] = {}     # tex_id -> claimed virtual texel keys
    positions, colors, face_index, labels = [], [], [], []
    skipped_untextured = 0
    degenerate_uv = 0

    for f in range(mesh.n_faces):
        tex_id = int(mesh.face_tex[f])
        if tex_id < 0:
            skipped_untextured += 1
            continue
        texture = mesh.textures[tex_id]
        h, w = texture.shape[:2]
        uv = mesh.face_uvs[f]
        fb = geometry.face_basis(mesh, f)
        label = int(mesh.face_labels[f])

        if fb.area_uv == 0:
            # Sliver chart: one representative point at the 3D centroid.
            degenerate_uv += 1
            positions.append(fb.corners.mean(axis=0)[None])
            corner_colors = lookup(texture, uv[:, 0], uv[:, 1])
            colors.append(np.rint(corner_colors.mean(axis=0))[None].astype(np.uint8))
            face_index.append(np.array([f], np.uint32))
            labels.append(np.array([label], np.int32))
            continue

        ni = math.ceil(w / s)
        nj = math.ceil(h / s)
        # Virtual texel (i, j) center in UV space.
        u_of = lambda i: (i + 0.5) * s / w
        v_of = lambda j: (j + 0.5) * s / h
        i_lo = max(0, math.floor(uv[:, 0].min() * w / s - 0.5))
        i_hi = min(ni - 1, math.ceil(uv[:, 0].max() * w / s - 0.5))
        j_lo = max(0, math.floor(uv[:, 1].min() * h / s - 0.5))
        j_hi = min(nj - 1, math.ceil(uv[:, 1].max() * h / s - 0.5))
        if i_hi < i_lo or j_hi < j_lo:
            continue
        ii, jj = np.meshgrid(np.arange(i_lo, i_hi + 1), np.arange(j_lo, j_hi + 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        uu, vv = u_of(ii), v_of(jj)

        a, b, c = uv
        det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        beta = ((c[1] - a[1]) * (uu - a[0]) - (c[0] - a[0]) * (vv - a[1])) / det
        gamma = (-(b[1] - a[1]) * (uu - a[0]) + (b[0] - a[0]) * (vv - a[1])) / det
        alpha = 1.0 - beta - gamma
        inside = (alpha >= -BARY_TOL) & (beta >= -BARY_TOL) & (gamma >= -BARY_TOL)
        if not inside.any():
            continue

        owned = claimed.setdefault(tex_id, set())
        keys = ii[inside] * nj + jj[inside]
        fresh = np.fromiter((k not in owned for k in keys), bool, len(keys))
        owned.update(keys[fresh])
        if not fresh.any():
            continue

        bary = np.column_stack([alpha[inside][fresh], beta[inside][fresh], gamma[inside][fresh]])
        positions.append(bary @ fb.corners)
        colors.append(lookup(texture, uu[inside][fresh], vv[inside][fresh]))
        face_index.append(np.full(fresh.sum(), f, np.uint32))
        labels.append(np.full(fresh.sum(), label, np.int32))

    if skipped_untextured:
        log.warning("texel_sample: skipped %d faces without texture", skipped_untextured)
    if report is not None:
        report["skipped_untextured"] = skipped_untextured
        report["degenerate_uv"] = degenerate_uv

    if not positions:
        return PointCloud(np.zeros((0, 3)), np.zeros(0, np.uint32),
                          colors=np.zeros((0, 3), np.uint8),
                          labels=np.zeros(0, np.int32), origin=mesh.origin.copy())
    return PointCloud(np.concatenate(positions),
                      np.concatenate(face_index),
                      colors=np.concatenate(colors).reshape(-1, 3).astype(np.uint8),
                      labels=np.concatenate(labels),
                      origin=mesh.origin.copy())


def _generate_candidates(mesh: TexturedMesh, n_candidates: int, seed: int, bilinear: bool):
    """Area-weighted uniform candidates with per-face substreams."""
    areas = geometry.face_areas(mesh)
    total = areas.sum()
    weights = areas / total
    master = np.random.default_rng([seed, 0])
    counts = np.bincount(master.choice(mesh.n_faces, n_candidates, p=weights),
                         minlength=mesh.n_faces)

    lookup = texel_color_bilinear if bilinear else texel_color
    has_tex = len(mesh.textures) > 0
    positions, colors, face_index, labels = [], [], [], []
    for f in np.nonzero(counts)[0]:
        count = int(counts[f])
        rng = np.random.default_rng([seed, int(f) + 1])
        u, v = rng.random((2, count))
        corners = mesh.vertices[mesh.face_vertices[f]]
        positions.append(geometry.sample_on_face_at(corners, u, v))
        face_index.append(np.full(count, f, np.uint32))
        labels.append(np.full(count, int(mesh.face_labels[f]), np.int32))
        if has_tex:
            tex_id = int(mesh.face_tex[f])
            if tex_id >= 0 and not np.isnan(mesh.face_uvs[f]).any():
                su = np.sqrt(u)
                bary = np.column_stack([1 - su, su * (1 - v), su * v])
                uv = bary @ mesh.face_uvs[f]
                colors.append(lookup(mesh.textures[tex_id], uv[:, 0], uv[:, 1]))
            else:
                colors.append(np.zeros((count, 3), np.uint8))

    positions = np.concatenate(positions) if positions else np.zeros((0, 3))
    return (positions,
            np.concatenate(face_index) if face_index else np.zeros(0, np.uint32),
            np.concatenate(colors).reshape(-1, 3).astype(np.uint8) if colors else None,
            np.concatenate(labels) if labels else np.zeros(0, np.int32))


def poisson_disk_sample(mesh: TexturedMesh, params: PoissonParams,
                        return_candidates: bool = False):
    """Greedy sample elimination: keep a candidate iff no kept point is within r.

    Candidates are visited in a seeded random permutation until every one has
    been either chosen or removed, which saturates the sampling with respect
    to the candidate pool.
    """
    areas = geometry.face_areas(mesh)
    total_area = float(areas.sum())
    if total_area <= 0:
        raise ValueError("mesh has zero total area")
    r = params.r
    n_candidates = math.ceil(params.oversample * total_area / (math.pi * (r / 2) ** 2))
    positions, face_index, colors, labels = _generate_candidates(
        mesh, n_candidates, params.seed, bilinear=False)

    perm = np.random.default_rng([params.seed, 0x5045524D]).permutation(len(positions))

    # A candidate is blocked exactly when some earlier kept point lies strictly
    # within r, so keeping a point marks every candidate in its open r-ball
    # blocked up front; the per-candidate test is then a single flag read.
    from scipy.spatial import cKDTree
    tree = cKDTree(positions)
    r2 = r * r
    kept = np.zeros(len(positions), bool)
    blocked = np.zeros(len(positions), bool)
    for idx in perm:
        if not blocked[idx]:
            kept[idx] = True
            near = np.asarray(tree.query_ball_point(positions[idx], r), np.int64)
            d2 = ((positions[near] - positions[idx]) ** 2).sum(axis=1)
            blocked[near[d2 < r2]] = True   # the ball query includes distance == r

    order = np.nonzero(kept)[0]      # ascending candidate index, deterministic
    cloud = PointCloud(positions[order], face_index[order],
                       colors=colors[order] if colors is not None else None,
                       labels=labels[order], origin=mesh.origin.copy())
    if return_candidates:
        return cloud, positions, kept
    return cloud


def grid_subsample(cloud: PointCloud, params: GridParams) -> PointCloud:
    """Keep one uniformly chosen point per occupied cubic cell of edge g.

    Channels pass through unmodified; output keeps ascending original order.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    keys = np.floor((cloud.positions - cloud.positions.min(axis=0)) / params.g).astype(np.int64)
    keys -= keys.min(axis=0)
    extent = keys.max(axis=0) + 1
    flat = (keys[:, 0] * extent[1] + keys[:, 1]) * extent[2] + keys[:, 2]

    order = np.lexsort((np.arange(len(flat)), flat))
    sorted_flat = flat[order]
    starts = np.nonzero(np.r_[True, sorted_flat[1:] != sorted_flat[:-1]])[0]
    counts = np.diff(np.r_[starts, len(flat)])

    rng = np.random.default_rng(params.seed)
    picks = order[starts + rng.integers(0, counts)]
    picks.sort()

    def take(ch):
        return ch[picks] if ch is not None else None

    return PointCloud(cloud.positions[picks], cloud.face_index[picks],
                      colors=take(cloud.colors), normals=take(cloud.normals),
                      elevations=take(cloud.elevations), labels=take(cloud.labels),
                      origin=cloud.origin.copy())
