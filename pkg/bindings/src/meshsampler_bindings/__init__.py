"""Scripting bindings for the meshsampler pipeline.

Exposes four array-level operations — sample_mesh, draw_subsets, tile, and
merge_and_backproject — that drive the installed `meshsampler` CLI through
its documented file formats. No algorithm is reimplemented here.
"""

from .api import (
    BindingError,
    BoundCloud,
    draw_subsets,
    merge_and_backproject,
    sample_mesh,
    tile,
)
from .formats import FormatError

__version__ = "0.1.0"

__all__ = [
    "BindingError",
    "BoundCloud",
    "FormatError",
    "draw_subsets",
    "merge_and_backproject",
    "sample_mesh",
    "tile",
    "__version__",
]
