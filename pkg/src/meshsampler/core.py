"""Core data containers shared by every stage of the pipeline.

All coordinates are stored as float64 relative to a per-mesh origin so that
projected urban coordinates (magnitude ~1e7 m) survive later 32-bit
serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Class id used for points sampled from faces without a ground-truth label.
NO_LABEL = -1

# No texture assigned to a face.
NO_TEXTURE = -1


@dataclass
class TexturedMesh:
    """Triangular mesh with optional per-corner UVs, textures and face labels.

    vertices    : (n, 3) float64, origin-relative
    face_vertices : (m, 3) int64 vertex indices
    face_uvs    : (m, 3, 2) float64 UV corners (NaN where absent)
    face_tex    : (m,) int32 texture index, NO_TEXTURE where absent
    face_labels : (m,) int32 ground-truth class, NO_LABEL where absent
    textures    : list of (H, W, 3) uint8 RGB images
    origin      : (3,) float64 subtracted from all vertices at load time
    """

    vertices: np.ndarray
    face_vertices: np.ndarray
    face_uvs: np.ndarray
    face_tex: np.ndarray
    face_labels: np.ndarray
    textures: list[np.ndarray] = field(default_factory=list)
    class_count: int = 7
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.face_vertices)

    def validate(self) -> None:
        fv = self.face_vertices
        if fv.size and (fv.min() < 0 or fv.max() >= self.n_vertices):
            bad = int(np.argmax((fv < 0).any(axis=1) | (fv >= self.n_vertices).any(axis=1)))
            raise ValueError(f"face {bad}: vertex index out of range")
        degenerate = (fv[:, 0] == fv[:, 1]) | (fv[:, 1] == fv[:, 2]) | (fv[:, 0] == fv[:, 2])
        if degenerate.any():
            raise ValueError(f"face {int(np.argmax(degenerate))}: repeated vertex index")
        textured = self.face_tex >= 0
        if textured.any():
            if np.isnan(self.face_uvs[textured]).any():
                bad = int(np.nonzero(textured & np.isnan(self.face_uvs).any(axis=(1, 2)))[0][0])
                raise ValueError(f"face {bad}: texture assigned but UVs missing")
            if self.face_tex.max() >= len(self.textures):
                bad = int(np.argmax(self.face_tex >= len(self.textures)))
                raise ValueError(f"face {bad}: unknown texture reference {self.face_tex[bad]}")
        labeled = self.face_labels >= 0
        if labeled.any() and self.face_labels.max() >= self.class_count:
            bad = int(np.argmax(self.face_labels >= self.class_count))
            raise ValueError(f"face {bad}: label {self.face_labels[bad]} >= class_count")


@dataclass
class PointCloud:
    """Sampled points with optional color / normal / elevation / label channels.

    positions are float64 origin-relative; the shared origin travels with the
    cloud so absolute coordinates can be reconstructed.
    """

    positions: np.ndarray
    face_index: np.ndarray
    colors: np.ndarray | None = None       # (n, 3) uint8
    normals: np.ndarray | None = None      # (n, 3) float, unit
    elevations: np.ndarray | None = None   # (n,) float
    labels: np.ndarray | None = None       # (n,) int32, NO_LABEL for none
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __len__(self) -> int:
        return len(self.positions)

    def validate(self) -> None:
        n = len(self.positions)
        for name in ("colors", "normals", "elevations", "labels", "face_index"):
            channel = getattr(self, name)
            if channel is not None and len(channel) != n:
                raise ValueError(f"channel {name!r} has length {len(channel)}, expected {n}")
        if self.normals is not None and len(self.normals):
            norms = np.linalg.norm(self.normals, axis=1)
            if np.abs(norms - 1.0).max() > 1e-5:
                raise ValueError("normals are not unit length")

    def with_channels(self, **channels) -> "PointCloud":
        return replace(self, **channels)


@dataclass
class LogitTable:
    """Per-point or per-face class scores."""

    rows: np.ndarray                # (n, class_count) float32
    per_face: bool = False

    @property
    def class_count(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class SubsetList:
    """Fixed-size index subsets: one center plus exactly k members each."""

    centers: np.ndarray             # (n_subsets,) uint32
    members: np.ndarray             # (n_subsets, k) uint32
    k: int = 0

    def __post_init__(self):
        if self.k == 0 and self.members.size:
            self.k = self.members.shape[1]

    def __len__(self) -> int:
        return len(self.centers)
