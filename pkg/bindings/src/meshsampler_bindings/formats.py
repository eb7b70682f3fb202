"""Standalone readers/writers for the meshsampler on-disk formats.

Implemented from the documented formats only — point-cloud PLY (binary
little-endian, fixed property order, float32 positions relative to an
`origin` header comment), LGT1 logit tables, and SUB1 subset lists — so the
bindings never import the core package.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

LGT_MAGIC = b"LGT1"
SUB_MAGIC = b"SUB1"

# channel -> (property names, ply type, numpy type), in on-disk order
CLOUD_PROPS = [
    ("colors", ("red", "green", "blue"), "uchar", "u1"),
    ("normals", ("nx", "ny", "nz"), "float", "f4"),
    ("elevations", ("elevation",), "float", "f4"),
    ("face_index", ("face_index",), "uint", "u4"),
    ("labels", ("label",), "int", "i4"),
]

_PLY_TYPES = {
    "char": "i1", "uchar": "u1", "short": "i2", "ushort": "u2",
    "int": "i4", "uint": "u4", "float": "f4", "double": "f8",
}


class FormatError(ValueError):
    pass


def _parse_header(f):
    if f.readline().strip() != b"ply":
        raise FormatError("not a PLY file")
    comments, elements = [], []
    while True:
        tokens = f.readline().decode("ascii", "replace").split()
        if not tokens:
            raise FormatError("truncated header")
        if tokens[0] == "format":
            if tokens[1] != "binary_little_endian":
                raise FormatError(f"unsupported format {tokens[1]!r}")
        elif tokens[0] == "comment":
            comments.append(" ".join(tokens[1:]))
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if tokens[1] == "list":
                elements[-1][2].append((tokens[4], _PLY_TYPES[tokens[2]],
                                        _PLY_TYPES[tokens[3]]))
            else:
                elements[-1][2].append((tokens[2], _PLY_TYPES[tokens[1]]))
        elif tokens[0] == "end_header":
            return comments, elements


def read_point_cloud(path):
    """Read a point-cloud PLY into a dict of arrays plus the float64 origin."""
    with open(path, "rb") as f:
        comments, elements = _parse_header(f)
        name, count, props = elements[0]
        if name != "vertex" or any(len(p) == 3 for p in props):
            raise FormatError("expected a scalar-only vertex element")
        dt = np.dtype([(p[0], "<" + p[1]) for p in props])
        buf = f.read(dt.itemsize * count)
    if len(buf) != dt.itemsize * count:
        raise FormatError("truncated vertex data")
    rec = np.frombuffer(buf, dt)

    origin = np.zeros(3)
    for c in comments:
        if c.startswith("origin "):
            origin = np.array([float(t) for t in c.split()[1:4]])
    out = {"origin": origin,
           "positions": np.column_stack([rec["x"], rec["y"], rec["z"]]).astype(np.float64)}
    names = rec.dtype.names
    for channel, props_, _, _ in CLOUD_PROPS:
        if props_[0] not in names:
            continue
        if len(props_) > 1:
            out[channel] = np.column_stack([rec[p] for p in props_])
        else:
            out[channel] = rec[props_[0]].copy()
    if "normals" in out:
        out["normals"] = out["normals"].astype(np.float64)
    return out


def write_point_cloud(path, positions, face_index, colors=None, normals=None,
                      elevations=None, labels=None, origin=(0.0, 0.0, 0.0)):
    """Write a point-cloud PLY byte-compatible with the core writer."""
    n = len(positions)
    channels = {"colors": colors, "normals": normals,
                "elevations": elevations, "face_index": face_index, "labels": labels}
    header = ["ply", "format binary_little_endian 1.0",
              "comment origin " + " ".join(repr(float(x)) for x in origin),
              f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    dtype = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    for channel, names, ply_t, np_t in CLOUD_PROPS:
        if channels[channel] is None:
            continue
        for name in names:
            header.append(f"property {ply_t} {name}")
            dtype.append((name, "<" + np_t))
    header.append("end_header")

    rec = np.empty(n, dtype=dtype)
    rec["x"], rec["y"], rec["z"] = np.asarray(positions, np.float64).T.astype(np.float32)
    for channel, names, _, _ in CLOUD_PROPS:
        values = channels[channel]
        if values is None:
            continue
        values = np.asarray(values)
        for j, name in enumerate(names):
            rec[name] = values[:, j] if len(names) > 1 else values
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(rec.tobytes())


def read_face_labels(path):
    """Per-face int32 labels of a labeled triangle-mesh PLY (binary LE)."""
    with open(path, "rb") as f:
        comments, elements = _parse_header(f)
        by_name = {name: (count, props) for name, count, props in elements}
        if "vertex" not in by_name or "face" not in by_name:
            raise FormatError("expected vertex and face elements")
        n_vertices, vprops = by_name["vertex"]
        f.read(n_vertices * sum(np.dtype(p[1]).itemsize for p in vprops))
        n_faces, fprops = by_name["face"]
        # fixed stride: every face row is <count><3 indices> plus scalars
        names = [p[0] for p in fprops]
        if names != ["vertex_indices", "label"]:
            raise FormatError(f"unexpected face properties {names}")
        dt = np.dtype([("n", "u1"), ("v", "<i4", 3), ("label", "<i4")])
        buf = f.read(dt.itemsize * n_faces)
    rec = np.frombuffer(buf, dt)
    if not (rec["n"] == 3).all():
        raise FormatError("only triangle faces are supported")
    return rec["label"].astype(np.int32)


def write_logits(path, rows, per_face=False):
    rows = np.ascontiguousarray(rows, dtype="<f4")
    with open(path, "wb") as f:
        f.write(LGT_MAGIC)
        f.write(struct.pack("<IIB", rows.shape[0], rows.shape[1], int(per_face)))
        f.write(rows.tobytes())


def read_logits(path):
    data = Path(path).read_bytes()
    if data[:4] != LGT_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    n, c, flag = struct.unpack_from("<IIB", data, 4)
    rows = np.frombuffer(data[13:13 + 4 * n * c], "<f4").reshape(n, c).copy()
    return rows, bool(flag)


def write_subsets(path, centers, members):
    members = np.ascontiguousarray(members, dtype="<u4")
    n, k = members.shape
    rec = np.empty(n, dtype=[("center", "<u4"), ("members", "<u4", (k,))])
    rec["center"] = centers
    rec["members"] = members
    with open(path, "wb") as f:
        f.write(SUB_MAGIC)
        f.write(struct.pack("<II", k, n))
        f.write(rec.tobytes())


def read_subsets(path):
    data = Path(path).read_bytes()
    if data[:4] != SUB_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    k, n = struct.unpack_from("<II", data, 4)
    rec = np.frombuffer(data[12:], dtype=[("center", "<u4"), ("members", "<u4", (k,))])
    if len(rec) != n:
        raise FormatError(f"{path}: expected {n} subsets, found {len(rec)}")
    return rec["center"].copy(), rec["members"].reshape(n, k).copy()
