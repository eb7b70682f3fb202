"""File formats: textured meshes (PLY/OBJ), point cloud PLY, LGT1 logits, SUB1 subsets.

All binary output is little-endian. Point positions are written as 32-bit
floats relative to a per-file origin carried in a header comment, so the
round trip stays bit-exact even for projected coordinates.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import NO_LABEL, NO_TEXTURE, LogitTable, PointCloud, SubsetList, TexturedMesh

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class PlyError(ValueError):
    pass


def _fmt_float(x: float) -> str:
    """Shortest decimal that round-trips the float64 exactly."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# generic PLY reader


class _PlyElement:
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.properties = []        # (name, dtype_code) or (name, count_code, dtype_code) for lists

    @property
    def has_list(self):
        return any(len(p) == 3 for p in self.properties)


def _parse_ply_header(f):
    if f.readline().strip() != b"ply":
        raise PlyError("not a PLY file")
    fmt = None
    comments = []
    elements = []
    while True:
        line = f.readline()
        if not line:
            raise PlyError("truncated header")
        tokens = line.decode("ascii", "replace").split()
        if not tokens:
            continue
        key = tokens[0]
        if key == "format":
            fmt = tokens[1]
            if fmt not in ("ascii", "binary_little_endian"):
                raise PlyError(f"unsupported PLY format {fmt!r}")
        elif key == "comment":
            comments.append(" ".join(tokens[1:]))
        elif key == "element":
            elements.append(_PlyElement(tokens[1], int(tokens[2])))
        elif key == "property":
            if not elements:
                raise PlyError("property before element")
            if tokens[1] == "list":
                elements[-1].properties.append(
                    (tokens[4], _PLY_TYPES[tokens[2]], _PLY_TYPES[tokens[3]]))
            else:
                elements[-1].properties.append((tokens[2], _PLY_TYPES[tokens[1]]))
        elif key == "end_header":
            break
    return fmt, comments, elements


def _read_ply_element(f, fmt, element):
    """Read one element block; returns dict of property name -> array / list of arrays."""
    list_props = {p[0] for p in element.properties if len(p) == 3}
    if fmt == "ascii":
        rows = {p[0]: [] for p in element.properties}
        for _ in range(element.count):
            tokens = f.readline().split()
            pos = 0
            for p in element.properties:
                if len(p) == 3:
                    n = int(tokens[pos]); pos += 1
                    rows[p[0]].append(np.array(tokens[pos:pos + n], dtype=np.dtype(p[2])))
                    pos += n
                else:
                    rows[p[0]].append(np.dtype(p[1]).type(tokens[pos])); pos += 1
        return {k: (v if k in list_props else np.array(v)) for k, v in rows.items()}

    if not element.has_list:
        dt = np.dtype([(p[0], "<" + p[1]) for p in element.properties])
        buf = f.read(dt.itemsize * element.count)
        if len(buf) != dt.itemsize * element.count:
            raise PlyError(f"truncated element {element.name!r}")
        rec = np.frombuffer(buf, dtype=dt)
        return {p[0]: rec[p[0]] for p in element.properties}

    # binary with list properties: sequential scan
    rows = {p[0]: [] for p in element.properties}
    data = f.read()
    off = 0
    for i in range(element.count):
        for p in element.properties:
            if len(p) == 3:
                cdt = np.dtype("<" + p[1])
                n = int(np.frombuffer(data, cdt, 1, off)[0]); off += cdt.itemsize
                vdt = np.dtype("<" + p[2])
                rows[p[0]].append(np.frombuffer(data, vdt, n, off)); off += vdt.itemsize * n
            else:
                vdt = np.dtype("<" + p[1])
                rows[p[0]].append(np.frombuffer(data, vdt, 1, off)[0]); off += vdt.itemsize
        if off > len(data):
            raise PlyError(f"truncated element {element.name!r} at row {i}")
    f.seek(off - len(data), 2)
    return {k: (v if k in list_props else np.array(v)) for k, v in rows.items()}


# ---------------------------------------------------------------------------
# mesh loading


def load_mesh(path, label_property_name: str = "label", class_count: int = 7) -> TexturedMesh:
    """Load an OBJ (+MTL+images) or PLY mesh; coordinates become origin-relative.

    The recorded origin is the per-axis minimum of the vertex coordinates.
    Missing labels load as NO_LABEL, untextured faces as NO_TEXTURE.
    """
    path = Path(path)
    if path.suffix.lower() == ".obj":
        mesh = _load_obj(path)
    else:
        mesh = _load_ply_mesh(path, label_property_name)
    mesh.class_count = class_count
    origin = mesh.vertices.min(axis=0) if len(mesh.vertices) else np.zeros(3)
    mesh.vertices = mesh.vertices - origin
    mesh.origin = origin
    mesh.validate()
    return mesh


def _load_texture(path: Path) -> np.ndarray:
    img = Image.open(path)
    if img.mode != "RGB":
        raise PlyError(f"texture {path.name}: only 8-bit RGB images are supported, got mode {img.mode!r}")
    return np.asarray(img, dtype=np.uint8)


def _load_ply_mesh(path: Path, label_property_name: str) -> TexturedMesh:
    with open(path, "rb") as f:
        fmt, comments, elements = _parse_ply_header(f)
        data = {}
        for el in elements:
            data[el.name] = _read_ply_element(f, fmt, el)

    textures = []
    for c in comments:
        if c.startswith("TextureFile"):
            textures.append(_load_texture(path.parent / c.split(None, 1)[1]))

    if "vertex" not in data:
        raise PlyError("no vertex element")
    v = data["vertex"]
    vertices = np.column_stack([np.asarray(v["x"], np.float64),
                                np.asarray(v["y"], np.float64),
                                np.asarray(v["z"], np.float64)])

    face = data.get("face", {})
    idx_name = "vertex_indices" if "vertex_indices" in face else "vertex_index"
    n_faces = len(face.get(idx_name, []))
    face_vertices = np.zeros((n_faces, 3), np.int64)
    face_uvs = np.full((n_faces, 3, 2), np.nan)
    face_tex = np.full(n_faces, NO_TEXTURE, np.int32)
    face_labels = np.full(n_faces, NO_LABEL, np.int32)

    for i in range(n_faces):
        idx = face[idx_name][i]
        if len(idx) != 3:
            raise PlyError(f"face {i}: only triangles are supported, got {len(idx)} vertices")
        face_vertices[i] = idx
    if "texcoord" in face:
        for i, tc in enumerate(face["texcoord"]):
            if len(tc) != 6:
                raise PlyError(f"face {i}: texcoord list has {len(tc)} entries, expected 6")
            face_uvs[i] = np.asarray(tc, np.float64).reshape(3, 2)
    if "texnumber" in face:
        face_tex[:] = np.asarray(face["texnumber"], np.int32)
    elif "texcoord" in face and textures:
        face_tex[:] = 0
    if label_property_name in face:
        face_labels[:] = np.asarray(face[label_property_name], np.int32)

    return TexturedMesh(vertices, face_vertices, face_uvs, face_tex, face_labels, textures)


def _load_obj(path: Path) -> TexturedMesh:
    vertices, uvs = [], []
    faces = []                      # (v-indices, vt-indices or None, material)
    material = None
    materials = {}                  # name -> texture file
    for raw in path.read_text().splitlines():
        tokens = raw.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if tokens[0] == "v":
            vertices.append([float(t) for t in tokens[1:4]])
        elif tokens[0] == "vt":
            uvs.append([float(tokens[1]), float(tokens[2])])
        elif tokens[0] == "mtllib":
            materials.update(_load_mtl(path.parent / tokens[1]))
        elif tokens[0] == "usemtl":
            material = tokens[1]
        elif tokens[0] == "f":
            if len(tokens) != 4:
                raise PlyError(f"face {len(faces)}: only triangles are supported")
            vi, ti = [], []
            for t in tokens[1:]:
                parts = t.split("/")
                vi.append(int(parts[0]) - 1)
                ti.append(int(parts[1]) - 1 if len(parts) > 1 and parts[1] else None)
            faces.append((vi, ti if all(t is not None for t in ti) else None, material))

    tex_order, textures = {}, []
    n_faces = len(faces)
    face_vertices = np.zeros((n_faces, 3), np.int64)
    face_uvs = np.full((n_faces, 3, 2), np.nan)
    face_tex = np.full(n_faces, NO_TEXTURE, np.int32)
    for i, (vi, ti, mat) in enumerate(faces):
        face_vertices[i] = vi
        if ti is not None and mat in materials:
            if mat not in tex_order:
                tex_order[mat] = len(textures)
                textures.append(_load_texture(path.parent / materials[mat]))
            face_tex[i] = tex_order[mat]
            face_uvs[i] = [uvs[t] for t in ti]

    return TexturedMesh(np.asarray(vertices, np.float64).reshape(-1, 3),
                        face_vertices, face_uvs, face_tex,
                        np.full(n_faces, NO_LABEL, np.int32), textures)


def _load_mtl(path: Path) -> dict:
    mats, current = {}, None
    for raw in path.read_text().splitlines():
        tokens = raw.split()
        if not tokens:
            continue
        if tokens[0] == "newmtl":
            current = tokens[1]
        elif tokens[0] == "map_Kd" and current is not None:
            mats[current] = tokens[-1]
    return mats


# ---------------------------------------------------------------------------
# point cloud PLY

_CLOUD_PROPS = [
    # (channel, property names, ply type, numpy type)
    ("colors", ("red", "green", "blue"), "uchar", "u1"),
    ("normals", ("nx", "ny", "nz"), "float", "f4"),
    ("elevations", ("elevation",), "float", "f4"),
    ("face_index", ("face_index",), "uint", "u4"),
    ("labels", ("label",), "int", "i4"),
]


def write_point_cloud(cloud: PointCloud, path) -> None:
    """Binary little-endian PLY with a fixed property order; see load_point_cloud."""
    cloud.validate()
    n = len(cloud)
    header = ["ply", "format binary_little_endian 1.0",
              "comment origin " + " ".join(_fmt_float(x) for x in cloud.origin),
              f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    dtype = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    for channel, names, ply_t, np_t in _CLOUD_PROPS:
        if getattr(cloud, channel) is None:
            continue
        for name in names:
            header.append(f"property {ply_t} {name}")
            dtype.append((name, "<" + np_t))
    header.append("end_header")

    rec = np.empty(n, dtype=dtype)
    rec["x"], rec["y"], rec["z"] = cloud.positions.T.astype(np.float32)
    for channel, names, _, _ in _CLOUD_PROPS:
        values = getattr(cloud, channel)
        if values is None:
            continue
        values = np.asarray(values)
        for j, name in enumerate(names):
            rec[name] = values[:, j] if len(names) > 1 else values
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(rec.tobytes())


def load_point_cloud(path) -> PointCloud:
    with open(path, "rb") as f:
        fmt, comments, elements = _parse_ply_header(f)
        vertex = next((el for el in elements if el.name == "vertex"), None)
        if vertex is None:
            raise PlyError("no vertex element")
        data = _read_ply_element(f, fmt, vertex)

    origin = np.zeros(3)
    for c in comments:
        if c.startswith("origin "):
            origin = np.array([float(t) for t in c.split()[1:4]])

    positions = np.column_stack([np.asarray(data["x"], np.float64),
                                 np.asarray(data["y"], np.float64),
                                 np.asarray(data["z"], np.float64)])
    kwargs = {}
    for channel, names, _, np_t in _CLOUD_PROPS:
        if names[0] not in data:
            continue
        if len(names) > 1:
            kwargs[channel] = np.column_stack([np.asarray(data[n]) for n in names])
        else:
            kwargs[channel] = np.asarray(data[names[0]])
    face_index = kwargs.pop("face_index", np.zeros(len(positions), np.uint32))
    if "normals" in kwargs:
        kwargs["normals"] = kwargs["normals"].astype(np.float64)
    return PointCloud(positions, face_index.astype(np.uint32), origin=origin, **kwargs)


def write_labeled_mesh(mesh: TexturedMesh, labels: np.ndarray, path) -> None:
    """Write the mesh geometry plus a per-face label property (binary PLY)."""
    if len(labels) != mesh.n_faces:
        raise ValueError(f"label count {len(labels)} != face count {mesh.n_faces}")
    header = ["ply", "format binary_little_endian 1.0",
              "comment origin " + " ".join(_fmt_float(x) for x in mesh.origin),
              f"element vertex {mesh.n_vertices}",
              "property float x", "property float y", "property float z",
              f"element face {mesh.n_faces}",
              "property list uchar int vertex_indices",
              "property int label",
              "end_header"]
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(mesh.vertices.astype("<f4").tobytes())
        face = np.empty(mesh.n_faces, dtype=[("n", "u1"), ("v", "<i4", 3), ("label", "<i4")])
        face["n"] = 3
        face["v"] = mesh.face_vertices
        face["label"] = labels
        f.write(face.tobytes())


# ---------------------------------------------------------------------------
# LGT1 logits

_LGT_MAGIC = b"LGT1"
_SUB_MAGIC = b"SUB1"


def write_logits(table: LogitTable, path) -> None:
    rows = np.ascontiguousarray(table.rows, dtype="<f4")
    if rows.size and not np.isfinite(rows).all():
        raise ValueError("logit rows contain non-finite values")
    with open(path, "wb") as f:
        f.write(_LGT_MAGIC)
        f.write(struct.pack("<IIB", rows.shape[0], rows.shape[1], 1 if table.per_face else 0))
        f.write(rows.tobytes())


def load_logits(path) -> LogitTable:
    data = Path(path).read_bytes()
    if data[:4] != _LGT_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    n, c, flag = struct.unpack_from("<IIB", data, 4)
    payload = data[13:]
    if len(payload) != 4 * n * c:
        raise ValueError(f"{path}: truncated payload ({len(payload)} bytes, expected {4 * n * c})")
    rows = np.frombuffer(payload, "<f4").reshape(n, c).copy()
    return LogitTable(rows, per_face=bool(flag))


def write_subsets(subsets: SubsetList, path) -> None:
    n = len(subsets)
    members = np.ascontiguousarray(subsets.members, dtype="<u4").reshape(n, subsets.k)
    rec = np.empty(n, dtype=[("center", "<u4"), ("members", "<u4", (subsets.k,))])
    rec["center"] = subsets.centers
    rec["members"] = members
    with open(path, "wb") as f:
        f.write(_SUB_MAGIC)
        f.write(struct.pack("<II", subsets.k, n))
        f.write(rec.tobytes())


def load_subsets(path) -> SubsetList:
    data = Path(path).read_bytes()
    if data[:4] != _SUB_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    k, n = struct.unpack_from("<II", data, 4)
    payload = data[12:]
    if len(payload) != 4 * n * (k + 1):
        raise ValueError(f"{path}: member count mismatch ({len(payload)} payload bytes for k={k}, n={n})")
    rec = np.frombuffer(payload, dtype=[("center", "<u4"), ("members", "<u4", (k,))])
    return SubsetList(rec["center"].copy(), rec["members"].reshape(n, k).copy(), k=k)
