"""Per-face and per-vertex differential quantities and barycentric machinery.

Conventions: faces are wound counter-clockwise seen from outside, so the
cross product (B-A)x(C-A) points outward. Degenerate faces (zero 3D area)
are kept in the mesh but excluded from sampling and normal averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TexturedMesh

# Inverse-distance clamp for normal interpolation; below coordinate noise.
EPS_DISTANCE = 1e-9

# Area-weighted normal sums below this magnitude trigger the edge-director fallback.
EPS_FOLD = 1e-12


@dataclass
class FaceBasis:
    """Everything the samplers need to know about one face."""

    face: int
    corners: np.ndarray          # (3, 3) 3D corners A, B, C
    uv: np.ndarray | None        # (3, 2) UV corners or None
    area_3d: float
    area_uv: float
    normal: np.ndarray           # unit, zero vector when degenerate


def face_cross(mesh: TexturedMesh) -> np.ndarray:
    """(m, 3) un-normalized face cross products (B-A)x(C-A)."""
    a, b, c = (mesh.vertices[mesh.face_vertices[:, i]] for i in range(3))
    return np.cross(b - a, c - a)


def face_areas(mesh: TexturedMesh) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_cross(mesh), axis=1)


def face_normal(mesh: TexturedMesh, f: int) -> np.ndarray:
    """Outward unit normal of face f (CCW winding)."""
    cross = face_cross(mesh)[f]
    norm = np.linalg.norm(cross)
    if norm == 0:
        raise ValueError(f"face {f} is degenerate")
    return cross / norm


def face_normals(mesh: TexturedMesh) -> np.ndarray:
    """(m, 3) unit normals; degenerate faces get the zero vector."""
    cross = face_cross(mesh)
    norms = np.linalg.norm(cross, axis=1)
    out = np.zeros_like(cross)
    ok = norms > 0
    out[ok] = cross[ok] / norms[ok, None]
    return out


def vertex_normals(mesh: TexturedMesh) -> np.ndarray:
    """Area-weighted average of adjacent-face normals, per vertex.

    When the weighted sum vanishes (two faces folded onto each other) the
    normal falls back to the sum of unit direction vectors of the adjacent
    edges, pointing from the vertex toward each neighbor. Isolated vertices
    get (0, 0, 1).
    """
    cross = face_cross(mesh)        # |cross| = 2*area, so summing cross IS the area weighting
    normals = np.zeros((mesh.n_vertices, 3))
    for i in range(3):
        np.add.at(normals, mesh.face_vertices[:, i], cross)

    norms = np.linalg.norm(normals, axis=1)
    fallback = norms < EPS_FOLD
    adjacent = np.zeros(mesh.n_vertices, bool)
    adjacent[mesh.face_vertices.ravel()] = True

    for v in np.nonzero(fallback & adjacent)[0]:
        faces = np.nonzero((mesh.face_vertices == v).any(axis=1))[0]
        acc = np.zeros(3)
        for f in faces:
            for w in mesh.face_vertices[f]:
                if w == v:
                    continue
                d = mesh.vertices[w] - mesh.vertices[v]
                n = np.linalg.norm(d)
                if n > 0:
                    acc += d / n
        if np.linalg.norm(acc) > EPS_FOLD:
            normals[v] = acc
            norms[v] = np.linalg.norm(acc)

    ok = norms >= EPS_FOLD
    normals[ok] /= norms[ok, None]
    normals[~ok] = (0.0, 0.0, 1.0)
    return normals


def interpolated_normal(mesh: TexturedMesh, f: int, p, vnormals: np.ndarray | None = None) -> np.ndarray:
    """Vertex normals of face f blended by inverse distance to p."""
    if vnormals is None:
        vnormals = vertex_normals(mesh)
    idx = mesh.face_vertices[f]
    corners = mesh.vertices[idx]
    d = np.linalg.norm(corners - np.asarray(p), axis=1)
    near = d < EPS_DISTANCE
    if near.any():
        return vnormals[idx[int(np.argmax(near))]]
    blended = (vnormals[idx] / d[:, None]).sum(axis=0)
    return blended / np.linalg.norm(blended)


def interpolated_normals(mesh: TexturedMesh, faces: np.ndarray, points: np.ndarray,
                         vnormals: np.ndarray | None = None) -> np.ndarray:
    """Vectorized interpolated_normal over many (face, point) pairs."""
    if vnormals is None:
        vnormals = vertex_normals(mesh)
    idx = mesh.face_vertices[faces]                     # (n, 3)
    corners = mesh.vertices[idx]                        # (n, 3, 3)
    d = np.linalg.norm(corners - points[:, None, :], axis=2)
    weights = 1.0 / np.maximum(d, EPS_DISTANCE)
    near = d < EPS_DISTANCE                             # corner hit: that normal exactly
    hit = near.any(axis=1)
    blended = (vnormals[idx] * weights[:, :, None]).sum(axis=1)
    if hit.any():
        first = np.argmax(near[hit], axis=1)
        blended[hit] = vnormals[idx[hit, first]]
    return blended / np.linalg.norm(blended, axis=1)[:, None]


def face_basis(mesh: TexturedMesh, f: int) -> FaceBasis:
    corners = mesh.vertices[mesh.face_vertices[f]]
    cross = np.cross(corners[1] - corners[0], corners[2] - corners[0])
    norm = np.linalg.norm(cross)
    uv = mesh.face_uvs[f] if not np.isnan(mesh.face_uvs[f]).any() else None
    area_uv = 0.0
    if uv is not None:
        e1, e2 = uv[1] - uv[0], uv[2] - uv[0]
        area_uv = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    return FaceBasis(f, corners, uv, 0.5 * norm, area_uv,
                     cross / norm if norm > 0 else np.zeros(3))


def uv_barycentric(uv_corners: np.ndarray, uv) -> np.ndarray:
    """Barycentric coordinates of uv in the UV triangle (a, b, c)."""
    a, b, c = uv_corners
    m = np.column_stack([b - a, c - a])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0:
        raise ValueError("degenerate UV triangle")
    rhs = np.asarray(uv, np.float64) - a
    beta = (m[1, 1] * rhs[0] - m[0, 1] * rhs[1]) / det
    gamma = (-m[1, 0] * rhs[0] + m[0, 0] * rhs[1]) / det
    return np.array([1.0 - beta - gamma, beta, gamma])


def uv_to_world(fb: FaceBasis, uv):
    """Map a UV point into 3D through the face's barycentric frame."""
    if fb.uv is None or fb.area_uv == 0:
        raise ValueError(f"face {fb.face}: degenerate or missing UV triangle")
    bary = uv_barycentric(fb.uv, uv)
    return bary @ fb.corners, bary


def sample_uniform_on_face(fb: FaceBasis, rng: np.random.Generator) -> np.ndarray:
    u, v = rng.random(2)
    return sample_on_face_at(fb.corners, u, v)


def sample_on_face_at(corners: np.ndarray, u, v) -> np.ndarray:
    """Square-root warp of the unit square onto the triangle (uniform density)."""
    su = np.sqrt(u)
    a, b, c = corners
    return np.multiply.outer(1.0 - su, a) + np.multiply.outer(su * (1.0 - v), b) \
        + np.multiply.outer(su * v, c)


def class_area(mesh: TexturedMesh) -> np.ndarray:
    """Total 3D face area per class; unlabeled faces are counted as class 0."""
    areas = face_areas(mesh)
    labels = np.where(mesh.face_labels >= 0, mesh.face_labels, 0)
    return np.bincount(labels, weights=areas, minlength=mesh.class_count)
