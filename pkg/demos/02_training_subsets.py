"""Draw class-balanced training subsets and overlapping inference tiles.

Urban scenes are dominated by ground points; a network trained on uniform
crops would rarely see the rare classes. Balanced drawing picks subset
centers so every class is visited equally often; tiling covers the whole
cloud with overlapping fixed-size neighborhoods for inference.

Run:  python3 demos/02_training_subsets.py
"""

import numpy as np

import meshsampler as ms

rng = np.random.default_rng(0)

# An unbalanced labeled cloud: 9000 ground points, 900 building, 100 car.
n = 10_000
positions = rng.random((n, 3)) * [50, 50, 8]
labels = np.ones(n, np.int32)
labels[9000:9900] = 3
labels[9900:] = 5
cloud = ms.PointCloud(positions, np.zeros(n, np.uint32), labels=labels)

weights = ms.class_weights(cloud)
print("inverse-frequency class weights:",
      {c: round(float(w), 4) for c, w in enumerate(weights) if w > 0})

# --- balanced training subsets --------------------------------------------
subsets = ms.draw_training_subsets(cloud, ms.SubsetParams(k=128, n_subsets=3000, seed=1))
hist = np.bincount(labels[subsets.centers.astype(np.int64)], minlength=6)
print("center-class visits over 3000 draws (expect ~1000 each):",
      {c: int(v) for c, v in enumerate(hist) if v})

# Each subset is a center plus its k nearest neighbors.
first = subsets.members[0].astype(np.int64)
radius = np.linalg.norm(positions[first] - positions[first[0]], axis=1).max()
print(f"subset 0: k={subsets.k} neighbors within {radius:.2f} m of its center")

# --- overlapping inference tiles ------------------------------------------
tiles = ms.tile_for_inference(cloud, k=512)
covered = np.zeros(n, bool)
covered[tiles.members.ravel().astype(np.int64)] = True
print(f"{len(tiles)} tiles of {tiles.k} points cover "
      f"{covered.mean():.1%} of the cloud "
      f"({tiles.members.size / n:.1f}x average overlap)")
