"""Uniform-grid spatial index with exact radius and k-nearest-neighbor queries.

Results are independent of the chosen cell size; ties are broken by ascending
point index so queries are deterministic across runs and thread counts.
"""

from __future__ import annotations

import numpy as np


class UniformGrid3D:
    def __init__(self, points: np.ndarray, cell_size: float):
        points = np.asarray(points, np.float64)
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if len(points) == 0:
            raise ValueError("cannot index an empty point set")
        if not np.isfinite(points).all():
            raise ValueError("non-finite coordinates")
        self.points = points
        self.cell_size = float(cell_size)
        self.min_corner = points.min(axis=0)
        cells = np.floor((points - self.min_corner) / self.cell_size).astype(np.int64)
        self.cells = {}
        order = np.lexsort((np.arange(len(points)), cells[:, 2], cells[:, 1], cells[:, 0]))
        sorted_cells = cells[order]
        boundaries = np.nonzero((sorted_cells[1:] != sorted_cells[:-1]).any(axis=1))[0] + 1
        for chunk in np.split(order, boundaries):
            self.cells[tuple(cells[chunk[0]])] = chunk
        self.cell_lo = cells.min(axis=0)
        self.cell_hi = cells.max(axis=0)

    def cell_of(self, p) -> tuple:
        return tuple(np.floor((np.asarray(p) - self.min_corner) / self.cell_size).astype(np.int64))

    def _candidates_in_box(self, lo, hi):
        """Indices of all points in cells overlapping the integer cell box [lo, hi]."""
        lo = np.maximum(lo, self.cell_lo)
        hi = np.minimum(hi, self.cell_hi)
        found = []
        for ix in range(lo[0], hi[0] + 1):
            for iy in range(lo[1], hi[1] + 1):
                for iz in range(lo[2], hi[2] + 1):
                    chunk = self.cells.get((ix, iy, iz))
                    if chunk is not None:
                        found.append(chunk)
        if not found:
            return np.empty(0, np.int64)
        return np.concatenate(found)

    def query_radius(self, center, radius: float) -> np.ndarray:
        """Indices of points with Euclidean distance <= radius, ascending index."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        center = np.asarray(center, np.float64)
        lo = np.floor((center - radius - self.min_corner) / self.cell_size).astype(np.int64)
        hi = np.floor((center + radius - self.min_corner) / self.cell_size).astype(np.int64)
        cand = self._candidates_in_box(lo, hi)
        if not len(cand):
            return cand
        d2 = ((self.points[cand] - center) ** 2).sum(axis=1)
        return np.sort(cand[d2 <= radius * radius])

    def knn(self, center, k: int) -> np.ndarray:
        """The k nearest indices, sorted by distance then by index.

        Returns fewer than k only when the grid holds fewer than k points.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        center = np.asarray(center, np.float64)
        n = len(self.points)
        k = min(k, n)

        # Expand the search box ring by ring until the kth best distance is
        # closer than anything outside the searched box.
        ring = 0
        base = self.cell_of(center)
        best = None                      # (d2, idx) arrays of current k best
        seen = []
        while True:
            lo = tuple(b - ring for b in base)
            hi = tuple(b + ring for b in base)
            if ring == 0:
                new = self._candidates_in_box(lo, hi)
            else:
                new = self._ring(lo, hi)
            if len(new):
                seen.append(new)
                cand = np.concatenate(seen)
                d2 = ((self.points[cand] - center) ** 2).sum(axis=1)
                order = np.lexsort((cand, d2))[:k]
                best = (d2[order], cand[order])
            # Distance from center to the border of the searched box.
            box_min = self.min_corner + (np.array(base) - ring) * self.cell_size
            box_max = self.min_corner + (np.array(base) + ring + 1) * self.cell_size
            margin = min(np.min(center - box_min), np.min(box_max - center))
            if best is not None and len(best[0]) == k and best[0][-1] <= margin * margin:
                return best[1]
            ring += 1
            if ring > self._max_ring(base):
                return best[1] if best is not None else np.empty(0, np.int64)

    def _max_ring(self, base) -> int:
        base = np.asarray(base)
        return int(max(np.abs(base - self.cell_lo).max(), np.abs(self.cell_hi - base).max()) + 1)

    def _ring(self, lo, hi):
        """Cells on the surface of the box [lo, hi] (interior already visited)."""
        clo = np.maximum(lo, self.cell_lo)
        chi = np.minimum(hi, self.cell_hi)
        found = []
        for ix in range(clo[0], chi[0] + 1):
            for iy in range(clo[1], chi[1] + 1):
                for iz in range(clo[2], chi[2] + 1):
                    if lo[0] < ix < hi[0] and lo[1] < iy < hi[1] and lo[2] < iz < hi[2]:
                        continue
                    chunk = self.cells.get((ix, iy, iz))
                    if chunk is not None:
                        found.append(chunk)
        if not found:
            return np.empty(0, np.int64)
        return np.concatenate(found)


def build(points, cell_size: float) -> UniformGrid3D:
    return UniformGrid3D(points, cell_size)


def query_radius(g: UniformGrid3D, center, radius: float) -> np.ndarray:
    return g.query_radius(center, radius)


def knn(g: UniformGrid3D, center, k: int) -> np.ndarray:
    return g.knn(center, k)
