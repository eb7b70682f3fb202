import subprocess

import numpy as np
import pytest


def run_cli(*args):
    proc = subprocess.run(["meshsampler"] + [str(a) for a in args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def scene_ply_text():
    """Small labeled town block as an ascii PLY string: a triangulated ground
    grid (classes 1, 2, 4) plus a box (class 3)."""
    extent, cells = 12.0, 16
    xs = np.linspace(0, extent, cells + 1)
    verts = [[x, y, 0.0] for x in xs for y in xs]
    faces, labels = [], []
    for i in range(cells):
        for j in range(cells):
            a = i * (cells + 1) + j
            b = (i + 1) * (cells + 1) + j
            for tri in ([a, b, b + 1], [a, b + 1, a + 1]):
                cx = np.mean([verts[t][0] for t in tri])
                cy = np.mean([verts[t][1] for t in tri])
                if cx < 4 and cy < 4:
                    labels.append(4)
                elif cx > 8 and cy > 8:
                    labels.append(2)
                else:
                    labels.append(1)
                faces.append(tri)

    o = len(verts)
    corners = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
               [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]
    verts += [[5.0 + 3 * c[0], 5.0 + 3 * c[1], 3 * c[2]] for c in corners]
    for q in ([4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]):
        faces += [[o + q[0], o + q[1], o + q[2]], [o + q[0], o + q[2], o + q[3]]]
        labels += [3, 3]

    lines = ["ply", "format ascii 1.0",
             f"element vertex {len(verts)}",
             "property float x", "property float y", "property float z",
             f"element face {len(faces)}",
             "property list uchar int vertex_indices",
             "property int label",
             "end_header"]
    lines += [" ".join(repr(float(c)) for c in v) for v in verts]
    lines += [f"3 {f[0]} {f[1]} {f[2]} {l}" for f, l in zip(faces, labels)]
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def mesh_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scene") / "scene.ply"
    path.write_text(scene_ply_text())
    return path


@pytest.fixture(scope="session")
def cloud_file(tmp_path_factory, mesh_file):
    """One CLI-produced point cloud shared by the parity tests."""
    path = tmp_path_factory.mktemp("cloud") / "cloud.ply"
    run_cli("sample", mesh_file, path, "--method", "poisson",
            "--radius", "0.4", "--seed", "1")
    return path
