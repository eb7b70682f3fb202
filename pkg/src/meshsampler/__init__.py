"""Point sampling of textured meshes for semantic segmentation pipelines."""

from .core import NO_LABEL, NO_TEXTURE, LogitTable, PointCloud, SubsetList, TexturedMesh
from .features import ElevationParams, attach_elevation, attach_normals
from .grid import UniformGrid3D
from .io import (load_logits, load_mesh, load_point_cloud, load_subsets,
                 write_labeled_mesh, write_logits, write_point_cloud, write_subsets)
from .geometry import face_areas, face_normals, interpolated_normal, vertex_normals
from .labels import (ConfusionMatrix, confusion, face_logits, format_metrics,
                     metrics, predict_faces)
from .sampling import (GridParams, PoissonParams, TexelParams,
                       grid_subsample, poisson_disk_sample, texel_sample)
from .subsets import (SubsetParams, class_weights, draw_training_subsets,
                      merge_tile_logits, tile_for_inference)

__version__ = "0.1.0"

__all__ = [
    "NO_LABEL", "NO_TEXTURE", "TexturedMesh", "PointCloud", "LogitTable", "SubsetList",
    "UniformGrid3D", "ConfusionMatrix",
    "load_mesh", "load_point_cloud", "write_point_cloud",
    "load_logits", "write_logits", "load_subsets", "write_subsets", "write_labeled_mesh",
    "TexelParams", "PoissonParams", "GridParams",
    "texel_sample", "poisson_disk_sample", "grid_subsample",
    "ElevationParams", "attach_normals", "attach_elevation",
    "SubsetParams", "class_weights", "draw_training_subsets",
    "tile_for_inference", "merge_tile_logits",
    "face_logits", "predict_faces", "confusion", "metrics", "format_metrics",
    "face_areas", "face_normals", "vertex_normals", "interpolated_normal",
]
