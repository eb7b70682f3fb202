"""Class-balanced training subsets and overlapping inference tiles.

A subset is a center point plus its k nearest neighbors (the center itself
is the first member, at distance zero). Training centers are drawn so that
every class present is visited equally often on average.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import LogitTable, PointCloud, SubsetList
from .grid import UniformGrid3D

log = logging.getLogger(__name__)


@dataclass
class SubsetParams:
    k: int
    n_subsets: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n_subsets < 1:
            raise ValueError("k and n_subsets must be >= 1")


def class_weights(cloud: PointCloud) -> np.ndarray:
    """Per-class drawing weights, inversely proportional to class frequency.

    Returns an array indexed by class id; absent classes and the unlabeled
    pseudo-class (-1) get weight zero. Weights sum to 1.
    """
    if cloud.labels is None:
        raise ValueError("cloud has no labels")
    labels = np.asarray(cloud.labels)
    labeled = labels[labels >= 0]
    if not len(labeled):
        raise ValueError("no labeled points")
    counts = np.bincount(labeled)
    weights = np.zeros(len(counts))
    present = counts > 0
    weights[present] = 1.0 / counts[present]
    return weights / weights.sum()


def _build_index(cloud: PointCloud) -> UniformGrid3D:
    extent = max(np.ptp(cloud.positions, axis=0).max(), 1e-6)
    spacing = extent / max(len(cloud) ** (1 / 3), 1.0)
    return UniformGrid3D(cloud.positions, spacing * 4)


def _padded_knn(index: UniformGrid3D, center, k: int) -> np.ndarray:
    members = index.knn(center, k)
    if len(members) < k:
        # Cloud smaller than k: repeat the farthest neighbors to keep the
        # fixed-k contract; the merge step averages duplicates per occurrence.
        pad = members[::-1][np.arange(k - len(members)) % len(members)]
        members = np.concatenate([members, pad])
        log.warning("subset padded by repetition: cloud smaller than k=%d", k)
    return members.astype(np.uint32)


def draw_training_subsets(cloud: PointCloud, params: SubsetParams,
                          index: UniformGrid3D | None = None) -> SubsetList:
    """Draw n_subsets center+kNN subsets with inverse-frequency class balancing.

    The center class is chosen by class weight, then the center uniformly
    within that class; draws are with replacement. Unlabeled points are never
    centers but may appear as neighbors.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    weights = class_weights(cloud)
    labels = np.asarray(cloud.labels)
    classes = np.nonzero(weights > 0)[0]
    by_class = {c: np.nonzero(labels == c)[0] for c in classes}
    index = index or _build_index(cloud)

    rng = np.random.default_rng(params.seed)
    # Per-point probability proportional to the class weight makes the class
    # visitation uniform: P(class c) ~ weight(c) * m_c = const.
    class_probs = np.array([weights[c] * len(by_class[c]) for c in classes])
    class_probs /= class_probs.sum()
    drawn_classes = rng.choice(classes, params.n_subsets, p=class_probs)
    centers = np.empty(params.n_subsets, np.uint32)
    members = np.empty((params.n_subsets, params.k), np.uint32)
    for i, c in enumerate(drawn_classes):
        pool = by_class[int(c)]
        center = int(pool[rng.integers(len(pool))])
        centers[i] = center
        members[i] = _padded_knn(index, cloud.positions[center], params.k)
    return SubsetList(centers, members, k=params.k)


def tile_for_inference(cloud: PointCloud, k: int,
                       index: UniformGrid3D | None = None) -> SubsetList:
    """Greedy overlapping cover: every point ends up in at least one subset.

    Repeatedly centers a subset on the lowest-index point not yet covered
    and takes its k nearest neighbors.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    index = index or _build_index(cloud)
    covered = np.zeros(len(cloud), bool)
    centers, members = [], []
    cursor = 0
    while cursor < len(cloud):
        if covered[cursor]:
            cursor += 1
            continue
        subset = _padded_knn(index, cloud.positions[cursor], k)
        centers.append(cursor)
        members.append(subset)
        covered[subset] = True
    return SubsetList(np.array(centers, np.uint32),
                      np.array(members, np.uint32).reshape(-1, k), k=k)


def merge_tile_logits(tiles: SubsetList, per_tile: np.ndarray, n_points: int) -> LogitTable:
    """Average the per-tile logit rows of every point over the tiles containing it.

    per_tile is (n_subsets, k, C) or flat (n_subsets * k, C), rows aligned
    with member order. Padded duplicate members contribute once per occurrence.
    """
    per_tile = np.asarray(per_tile, np.float64)
    if per_tile.ndim == 2:
        per_tile = per_tile.reshape(len(tiles), tiles.k, -1)
    if per_tile.shape[:2] != (len(tiles), tiles.k):
        raise ValueError(f"logit blocks {per_tile.shape} do not match "
                         f"{len(tiles)} subsets of size {tiles.k}")
    c = per_tile.shape[2]
    acc = np.zeros((n_points, c))
    count = np.zeros(n_points)
    flat_members = tiles.members.ravel().astype(np.int64)
    np.add.at(acc, flat_members, per_tile.reshape(-1, c))
    np.add.at(count, flat_members, 1)
    touched = count > 0
    acc[touched] /= count[touched, None]
    return LogitTable(acc.astype(np.float32), per_face=False)
