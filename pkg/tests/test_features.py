import numpy as np
import pytest

import meshsampler as ms
from meshsampler import features, geometry

from conftest import flat_square, make_mesh


def _uniform_cloud(mesh, n, seed):
    """Uniform area-weighted samples with face_index, for feature tests."""
    rng = np.random.default_rng(seed)
    areas = geometry.face_areas(mesh)
    faces = rng.choice(mesh.n_faces, n, p=areas / areas.sum())
    u, v = rng.random((2, n))
    corners = mesh.vertices[mesh.face_vertices[faces]]
    su = np.sqrt(u)
    pts = ((1 - su)[:, None] * corners[:, 0] + (su * (1 - v))[:, None] * corners[:, 1]
           + (su * v)[:, None] * corners[:, 2])
    return ms.PointCloud(pts, faces.astype(np.uint32))


def brute_force_elevation(positions, radius):
    xy = positions[:, :2]
    z = positions[:, 2]
    out = np.empty(len(positions))
    for i in range(len(positions)):
        d = np.linalg.norm(xy - xy[i], axis=1)
        out[i] = z[i] - z[d <= radius].min()
    return out


class TestAttachNormals:
    def test_flat_square_both_kinds(self):
        mesh = flat_square()
        cloud = _uniform_cloud(mesh, 50, 1)
        for kind in ("face", "interpolated"):
            out = ms.attach_normals(cloud, mesh, kind=kind)
            assert np.allclose(out.normals, [0, 0, 1])

    def test_face_kind_constant_per_face(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0.5, 1, 0.4], [1.5, 1, 0.4]], float)
        mesh = make_mesh(v, [[0, 1, 2], [1, 3, 2]])
        cloud = _uniform_cloud(mesh, 100, 2)
        out = ms.attach_normals(cloud, mesh, kind="face")
        for f in (0, 1):
            rows = out.normals[cloud.face_index == f]
            assert (rows == rows[0]).all()

    def test_interpolated_converges_at_ridge(self):
        # Tent with agreeing normals along the ridge: approach from both faces.
        v = np.array([[0, 0, 0], [1, 0, 1e-5], [1, 1, 0], [0, 1, -1e-5]], float)
        mesh = make_mesh(v, [[0, 1, 2], [0, 2, 3]])
        edge_pt = 0.45 * v[0] + 0.55 * v[2]
        eps = 1e-7
        pts = np.array([edge_pt + eps * (v[1] - edge_pt),
                        edge_pt + eps * (v[3] - edge_pt)])
        cloud = ms.PointCloud(pts, np.array([0, 1], np.uint32))
        out = ms.attach_normals(cloud, mesh, kind="interpolated")
        assert np.linalg.norm(out.normals[0] - out.normals[1]) < 1e-4

    def test_degenerate_face_fallback(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [3, 0, 0]], float)
        mesh = make_mesh(v, [[0, 1, 2], [1, 3, 4]])     # face 1 is collinear
        pts = np.array([[0.2, 0.2, 0], [2.0, 0.0, 0]])
        cloud = ms.PointCloud(pts, np.array([0, 1], np.uint32))
        out = ms.attach_normals(cloud, mesh, kind="face")
        assert np.allclose(out.normals[1], [0, 0, 1])   # nearest healthy face normal

    def test_unknown_kind(self):
        mesh = flat_square()
        cloud = _uniform_cloud(mesh, 3, 0)
        with pytest.raises(ValueError, match="kind"):
            ms.attach_normals(cloud, mesh, kind="vertex")


class TestAttachElevation:
    def test_flat_plane_all_zero(self, rng):
        pts = np.column_stack([rng.random((100, 2)) * 30, np.full(100, 5.0)])
        cloud = ms.PointCloud(pts, np.zeros(100, np.uint32))
        out = ms.attach_elevation(cloud, features.ElevationParams(20, 1))
        assert (out.elevations == 0).all()

    def test_single_tall_point(self, rng):
        ground = np.column_stack([rng.random((200, 2)) * 10, np.full(200, 2.0)])
        tall = np.array([[5.0, 5.0, 10.0]])
        pts = np.vstack([ground, tall])
        cloud = ms.PointCloud(pts, np.zeros(201, np.uint32))
        out = ms.attach_elevation(cloud, features.ElevationParams(20, 1))
        assert out.elevations[-1] == pytest.approx(8.0)
        assert np.allclose(out.elevations[:-1], 0.0)

    def test_plateaus_beyond_radius_independent(self, rng):
        # Two plateaus separated by more than R: each keeps elevation 0.
        a = np.column_stack([rng.random((80, 2)) * 5, np.zeros(80)])
        b = np.column_stack([rng.random((80, 2)) * 5 + 40, np.full(80, 30.0)])
        pts = np.vstack([a, b])
        cloud = ms.PointCloud(pts, np.zeros(160, np.uint32))
        params = features.ElevationParams(radius=10, cell=1)
        out = ms.attach_elevation(cloud, params)
        assert np.allclose(out.elevations, 0.0)
        # matches the brute-force min-in-disk result here (no cell boundary cases)
        assert np.allclose(out.elevations, brute_force_elevation(pts, 10))

    def test_sandwich_between_brute_force_radii(self, rng):
        pts = np.column_stack([rng.random((1000, 2)) * 40,
                               rng.random(1000) * 15])
        cloud = ms.PointCloud(pts, np.zeros(1000, np.uint32))
        R, cell = 8.0, 1.0
        out = ms.attach_elevation(cloud, features.ElevationParams(R, cell))
        slack = cell * np.sqrt(2)
        lo = brute_force_elevation(pts, R - slack)
        hi = brute_force_elevation(pts, R + slack)
        assert (out.elevations <= hi + 1e-9).all()
        assert (out.elevations >= lo - 1e-9).all()

    def test_nonnegative_and_z_equivariant(self, rng):
        pts = np.column_stack([rng.random((300, 2)) * 20, rng.random(300) * 9])
        cloud = ms.PointCloud(pts.copy(), np.zeros(300, np.uint32))
        out = ms.attach_elevation(cloud)
        assert (out.elevations >= 0).all()
        shifted = pts + np.array([13.0, -7.0, 100.0])
        out2 = ms.attach_elevation(ms.PointCloud(shifted, np.zeros(300, np.uint32)))
        assert np.allclose(out.elevations, out2.elevations)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            features.ElevationParams(0, 1)
        with pytest.raises(ValueError):
            features.ElevationParams(5, 6)
