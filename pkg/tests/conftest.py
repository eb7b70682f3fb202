import numpy as np
import pytest

from meshsampler import TexturedMesh


def make_mesh(vertices, faces, uvs=None, tex=None, labels=None, textures=None,
              class_count=7):
    vertices = np.asarray(vertices, np.float64)
    faces = np.asarray(faces, np.int64)
    n = len(faces)
    mesh = TexturedMesh(
        vertices, faces,
        np.asarray(uvs, np.float64) if uvs is not None else np.full((n, 3, 2), np.nan),
        np.asarray(tex, np.int32) if tex is not None else np.full(n, -1, np.int32),
        np.asarray(labels, np.int32) if labels is not None else np.full(n, -1, np.int32),
        textures or [], class_count=class_count)
    mesh.validate()
    return mesh


def flat_square(labels=(1, 2), size=1.0):
    """Two CCW triangles tiling [0, size]^2 in the z=0 plane."""
    v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float) * size
    return make_mesh(v, [[0, 1, 2], [0, 2, 3]], labels=labels)


def grid_plane(nx, ny, size, z=0.0, labels=None, rng=None):
    """Triangulated nx x ny quad grid covering [0, size]^2 at height z."""
    xs = np.linspace(0, size, nx + 1)
    ys = np.linspace(0, size, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])
    faces = []
    for i in range(nx):
        for j in range(ny):
            a = i * (ny + 1) + j
            b = (i + 1) * (ny + 1) + j
            faces.append([a, b, b + 1])
            faces.append([a, b + 1, a + 1])
    return verts, np.array(faces)


def box(origin, size):
    """12 CCW triangles of an axis-aligned box (outward normals)."""
    o = np.asarray(origin, float)
    s = np.asarray(size, float)
    corners = o + np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]) * s
    quads = [([0, 3, 2, 1]),    # bottom (outward = -z)
             ([4, 5, 6, 7]),    # top
             ([0, 1, 5, 4]),    # -y
             ([1, 2, 6, 5]),    # +x
             ([2, 3, 7, 6]),    # +y
             ([3, 0, 4, 7])]    # -x
    faces = []
    for q in quads:
        faces.append([q[0], q[1], q[2]])
        faces.append([q[0], q[2], q[3]])
    return corners, np.array(faces)


def urban_mesh(target_faces=50_000, extent=30.0, seed=0, class_count=7):
    """Synthetic urban block: finely tessellated ground plus labeled boxes.

    Labels: 1 terrain ground, 2 vegetation patches, 3 building boxes,
    4 water patch, 5 vehicle boxes, 6 boat boxes; a few faces stay
    unclassified (0).
    """
    rng = np.random.default_rng(seed)
    n_boxes = 14
    box_faces = n_boxes * 12
    quads = max(-(-(target_faces - box_faces) // 2), 8)
    nx = int(np.sqrt(quads))
    ny = max(-(-quads // nx), 1)
    verts, faces = grid_plane(nx, ny, extent)
    centroids = verts[faces].mean(axis=1)
    labels = np.ones(len(faces), np.int32)                     # terrain
    labels[(centroids[:, 0] < extent * 0.25) & (centroids[:, 1] < extent * 0.3)] = 4  # water
    labels[(centroids[:, 0] > extent * 0.7) & (centroids[:, 1] > extent * 0.65)] = 2  # vegetation
    labels[:4] = 0                                             # a few unclassified slivers

    all_verts = [verts]
    all_faces = [faces]
    all_labels = [labels]
    offset = len(verts)
    kinds = [3] * 6 + [5] * 5 + [6] * 3
    for kind in kinds:
        if kind == 3:
            size = rng.uniform([3, 3, 4], [6, 6, 12])
        elif kind == 5:
            size = rng.uniform([1.5, 1.5, 1.2], [2.5, 2.5, 2.0])
        else:
            size = rng.uniform([2, 1, 0.8], [4, 2, 1.5])
        size[:2] = np.minimum(size[:2], extent * 0.8)
        pos = rng.uniform([0, 0, 0], [extent - size[0], extent - size[1], 0.0001])
        bv, bf = box(pos, size)
        all_verts.append(bv)
        all_faces.append(bf + offset)
        all_labels.append(np.full(len(bf), kind, np.int32))
        offset += len(bv)

    return make_mesh(np.concatenate(all_verts), np.concatenate(all_faces),
                     labels=np.concatenate(all_labels), class_count=class_count)


def point_in_uv_triangle(uv_corners, u, v, tol=1e-9):
    """Half-plane rasterization test, independent of the barycentric solver."""
    a, b, c = [np.asarray(p, float) for p in uv_corners]
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    inside = True
    for p, q in ((a, b), (b, c), (c, a)):
        edge = (q[0] - p[0]) * (v - p[1]) - (q[1] - p[1]) * (u - p[0])
        inside &= (edge / area2) >= -tol
    return inside


def rasterize_count(uv_corners, width, height, s):
    """Count virtual texel centers of a (W/s x H/s) grid inside the UV triangle."""
    ni = int(np.ceil(width / s))
    nj = int(np.ceil(height / s))
    count = 0
    for i in range(ni):
        for j in range(nj):
            u = (i + 0.5) * s / width
            v = (j + 0.5) * s / height
            if point_in_uv_triangle(uv_corners, u, v):
                count += 1
    return count


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if label == "PASS" and getattr(rep, "when", "call") != "call":
                continue
            lines.setdefault(nodeid.split("::")[-1], label)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]} {name}")
