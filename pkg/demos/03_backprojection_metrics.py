"""Project per-point class logits back onto mesh faces and score the result.

Simulates the inference half of a segmentation pipeline: sample a labeled
scene, tile it, fabricate noisy per-point logits (as a trained network
would emit), merge overlapping tiles, accumulate logits per source face,
and compare the predicted face labels against the ground truth.

Run:  python3 demos/03_backprojection_metrics.py
"""

import numpy as np

import meshsampler as ms

rng = np.random.default_rng(42)

# A labeled scene: ground grid plus a box-shaped "building".
cells, extent = 20, 20.0
xs = np.linspace(0, extent, cells + 1)
gx, gy = np.meshgrid(xs, xs, indexing="ij")
verts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
faces, labels = [], []
for i in range(cells):
    for j in range(cells):
        a, b = i * (cells + 1) + j, (i + 1) * (cells + 1) + j
        faces += [[a, b, b + 1], [a, b + 1, a + 1]]
        labels += [1, 1]
o = len(verts)
corners = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]) * 4.0 + [8, 8, 0]
verts = np.vstack([verts, corners])
for q in ([4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]):
    faces += [[o + q[0], o + q[1], o + q[2]], [o + q[0], o + q[2], o + q[3]]]
    labels += [3, 3]
mesh = ms.TexturedMesh(verts, np.array(faces), np.full((len(faces), 3, 2), np.nan),
                       np.full(len(faces), -1, np.int32),
                       np.array(labels, np.int32))

cloud = ms.poisson_disk_sample(mesh, ms.PoissonParams(r=0.3, seed=0))
tiles = ms.tile_for_inference(cloud, k=256)
print(f"{len(cloud)} points in {len(tiles)} tiles of {tiles.k}")

# Fabricated network output: one-hot of the true label plus Gaussian noise.
members = tiles.members.ravel().astype(np.int64)
rows = np.zeros((members.size, mesh.class_count), np.float32)
rows[np.arange(len(rows)),
     np.asarray(cloud.labels)[members].clip(0, mesh.class_count - 1)] = 1.0
rows += rng.normal(0, 0.1, rows.shape).astype(np.float32)

merged = ms.merge_tile_logits(tiles, rows, len(cloud))        # per-point mean
per_face = ms.face_logits(cloud, merged, mesh)                # per-face sum
pred = ms.predict_faces(per_face)                             # argmax

metrics = ms.metrics(ms.confusion(pred, mesh))
print(ms.format_metrics(metrics))
