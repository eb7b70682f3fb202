import numpy as np
import pytest
from scipy import stats

import meshsampler as ms
from meshsampler import subsets

from conftest import rng  # noqa: F401


def labeled_cloud(class_sizes, rng, spread=10.0):
    """Random cloud with the given number of points per class id (index = class)."""
    labels = np.concatenate([np.full(n, c, np.int32)
                             for c, n in enumerate(class_sizes) if n])
    n = len(labels)
    order = rng.permutation(n)
    labels = labels[order]
    pts = rng.random((n, 3)) * spread
    return ms.PointCloud(pts, np.zeros(n, np.uint32), labels=labels)


class TestClassWeights:
    def test_90_10_split(self, rng):
        cloud = labeled_cloud([0, 90, 10], rng)
        w = ms.class_weights(cloud)
        assert w[1] == pytest.approx(0.1)
        assert w[2] == pytest.approx(0.9)

    def test_single_class(self, rng):
        cloud = labeled_cloud([0, 0, 0, 25], rng)
        w = ms.class_weights(cloud)
        assert w[3] == pytest.approx(1.0)

    def test_unlabeled_excluded(self, rng):
        cloud = labeled_cloud([0, 50, 50], rng)
        cloud.labels[:10] = -1
        w = ms.class_weights(cloud)
        assert w.sum() == pytest.approx(1.0)

    def test_rare_classes_dominate(self, rng):
        # SUM-like imbalance: two rare classes below 3% combined still get
        # over half the total weight under inverse frequency.
        sizes = [0, 300, 100, 520, 50, 18, 12]
        cloud = labeled_cloud(sizes, rng)
        w = ms.class_weights(cloud)
        assert w[5] + w[6] > 0.5

    def test_errors(self, rng):
        cloud = labeled_cloud([0, 5], rng).with_channels(labels=None)
        with pytest.raises(ValueError, match="labels"):
            ms.class_weights(cloud)
        cloud2 = labeled_cloud([0, 5], rng)
        cloud2.labels[:] = -1
        with pytest.raises(ValueError, match="labeled"):
            ms.class_weights(cloud2)


class TestDrawTrainingSubsets:
    def test_k_equals_cloud_size(self, rng):
        cloud = labeled_cloud([0, 8, 8], rng)
        result = ms.draw_training_subsets(cloud, ms.SubsetParams(16, 5, seed=1))
        for row in result.members:
            assert sorted(row.tolist()) == list(range(16))

    def test_balanced_center_classes_chi2(self, rng):
        cloud = labeled_cloud([0, 900, 100], rng)
        result = ms.draw_training_subsets(cloud, ms.SubsetParams(1, 10_000, seed=7))
        classes = cloud.labels[result.centers.astype(np.int64)]
        counts = [int((classes == 1).sum()), int((classes == 2).sum())]
        assert stats.chisquare(counts).pvalue > 0.01

    def test_deterministic(self, rng):
        cloud = labeled_cloud([0, 40, 40], rng)
        a = ms.draw_training_subsets(cloud, ms.SubsetParams(8, 20, seed=3))
        b = ms.draw_training_subsets(cloud, ms.SubsetParams(8, 20, seed=3))
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.members, b.members)

    def test_unlabeled_never_center(self, rng):
        cloud = labeled_cloud([0, 30, 30], rng)
        cloud.labels[:20] = -1
        result = ms.draw_training_subsets(cloud, ms.SubsetParams(4, 200, seed=2))
        assert (cloud.labels[result.centers.astype(np.int64)] >= 0).all()

    def test_padding_when_cloud_smaller_than_k(self, rng):
        cloud = labeled_cloud([0, 3], rng)
        result = ms.draw_training_subsets(cloud, ms.SubsetParams(7, 2, seed=1))
        assert result.members.shape == (2, 7)
        for row in result.members:
            assert set(row.tolist()) == {0, 1, 2}

    def test_members_are_knn_of_center(self, rng):
        cloud = labeled_cloud([0, 60, 40], rng)
        result = ms.draw_training_subsets(cloud, ms.SubsetParams(9, 10, seed=5))
        for center, row in zip(result.centers, result.members):
            d2 = ((cloud.positions - cloud.positions[center]) ** 2).sum(axis=1)
            expected = np.lexsort((np.arange(len(cloud)), d2))[:9]
            assert np.array_equal(np.asarray(row, np.int64), expected)


class TestTileForInference:
    def test_k_covers_everything_in_one_tile(self, rng):
        cloud = labeled_cloud([0, 12], rng)
        tiles = ms.tile_for_inference(cloud, 12)
        assert len(tiles) == 1
        assert set(tiles.members[0].tolist()) == set(range(12))

    def test_collinear_coverage_and_bound(self):
        pts = np.column_stack([np.arange(100, dtype=float),
                               np.zeros(100), np.zeros(100)])
        cloud = ms.PointCloud(pts, np.zeros(100, np.uint32))
        tiles = ms.tile_for_inference(cloud, 10)
        covered = np.zeros(100, bool)
        covered[tiles.members.ravel().astype(np.int64)] = True
        assert covered.all()
        assert len(tiles) <= 2 * int(np.ceil(100 / 10))

    def test_coverage_random_fixtures(self, rng):
        for _ in range(20):
            n = int(rng.integers(20, 400))
            k = int(rng.integers(2, 40))
            cloud = ms.PointCloud(rng.random((n, 3)) * 5, np.zeros(n, np.uint32))
            tiles = ms.tile_for_inference(cloud, min(k, n))
            covered = np.zeros(n, bool)
            covered[tiles.members.ravel().astype(np.int64)] = True
            assert covered.all()

    def test_oversized_k_pads_single_subset(self, rng):
        cloud = labeled_cloud([0, 5], rng)
        tiles = ms.tile_for_inference(cloud, 12)
        assert len(tiles) == 1
        assert tiles.members.shape == (1, 12)


class TestMergeTileLogits:
    def merge_oracle(self, tiles, blocks, n_points):
        acc = np.zeros((n_points, blocks.shape[-1]))
        cnt = np.zeros(n_points)
        for t in range(len(tiles)):
            for j in range(tiles.k):
                p = int(tiles.members[t, j])
                acc[p] += blocks[t, j]
                cnt[p] += 1
        nz = cnt > 0
        acc[nz] /= cnt[nz, None]
        return acc

    def test_single_tile_passthrough(self):
        tiles = ms.SubsetList(np.array([0], np.uint32),
                              np.array([[0, 1, 2]], np.uint32), k=3)
        blocks = np.arange(6, dtype=np.float32).reshape(1, 3, 2)
        merged = ms.merge_tile_logits(tiles, blocks, 3)
        assert np.allclose(merged.rows, blocks[0])

    def test_two_tile_mean(self):
        tiles = ms.SubsetList(np.array([0, 1], np.uint32),
                              np.array([[0], [0]], np.uint32), k=1)
        blocks = np.array([[[1.0, 0.0]], [[3.0, 2.0]]])
        merged = ms.merge_tile_logits(tiles, blocks, 1)
        assert np.allclose(merged.rows[0], [2.0, 1.0])

    def test_matches_oracle_random_overlap(self, rng):
        n_points, k, c = 50, 12, 4
        members = rng.integers(0, n_points, (3, k)).astype(np.uint32)
        tiles = ms.SubsetList(members[:, 0].copy(), members, k=k)
        blocks = rng.normal(size=(3, k, c))
        merged = ms.merge_tile_logits(tiles, blocks, n_points)
        assert np.allclose(merged.rows, self.merge_oracle(tiles, blocks, n_points),
                           atol=1e-6)

    def test_permutation_invariant_over_tiles(self, rng):
        members = rng.integers(0, 30, (5, 6)).astype(np.uint32)
        tiles = ms.SubsetList(members[:, 0].copy(), members, k=6)
        blocks = rng.normal(size=(5, 6, 3))
        merged = ms.merge_tile_logits(tiles, blocks, 30)
        perm = rng.permutation(5)
        tiles2 = ms.SubsetList(members[perm, 0].copy(), members[perm], k=6)
        merged2 = ms.merge_tile_logits(tiles2, blocks[perm], 30)
        assert np.allclose(merged.rows, merged2.rows, atol=1e-6)

    def test_shape_mismatch(self, rng):
        tiles = ms.SubsetList(np.array([0], np.uint32),
                              np.array([[0, 1]], np.uint32), k=2)
        with pytest.raises(ValueError, match="match"):
            ms.merge_tile_logits(tiles, np.zeros((2, 2, 3)), 5)
