"""Readers for STL (binary and ASCII) and OBJ, writers for STL, OBJ and PLY."""

import os
import struct
from pathlib import Path

import numpy as np

from .errors import EmptyMeshError, MeshFileNotFound, MeshParseError
from .geometry import TriangleMesh

FORMATS = ("stl-binary", "stl-ascii", "obj")
_STL_RECORD = np.dtype(
    [("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]
)


def _detect(path, data):
    ext = Path(path).suffix.lower()
    if ext == ".obj":
        return "obj"
    if ext != ".stl":
        raise MeshParseError(f"cannot infer mesh format from extension {ext!r}")
    # a binary STL may start with "solid" too; trust the record count when it fits
    if len(data) >= 84:
        n = struct.unpack_from("<I", data, 80)[0]
        if 84 + 50 * n == len(data):
            return "stl-binary"
    if data.lstrip()[:5].lower() == b"solid":
        return "stl-ascii"
    return "stl-binary"


def load_mesh(path, format=None):
    """Load a triangle mesh; zero-area faces are dropped and counted in ``dropped_faces``.

    ``format`` is one of ``FORMATS`` or None to infer from the extension and
    content. File units are meters.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MeshFileNotFound(f"mesh file not found: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = format.lower() if format else _detect(path, data)
    if fmt == "stl-binary":
        tris = _parse_stl_binary(data)
    elif fmt == "stl-ascii":
        tris = _parse_stl_ascii(data)
    elif fmt == "obj":
        tris = _parse_obj(data)
    else:
        raise ValueError(f"unknown mesh format {format!r}; expected one of {FORMATS}")
    if len(tris) == 0:
        raise EmptyMeshError(f"{path}: no faces")
    try:
        return TriangleMesh(tris, name=Path(path).stem)
    except EmptyMeshError as exc:
        raise EmptyMeshError(f"{path}: {exc}") from None


def _parse_stl_binary(data):
    if len(data) < 84:
        raise MeshParseError("binary STL shorter than its 84-byte header", offset=len(data))
    n = struct.unpack_from("<I", data, 80)[0]
    need = 84 + 50 * n
    if len(data) < need:
        # offset of the first truncated record
        whole = (len(data) - 84) // 50
        raise MeshParseError(f"binary STL declares {n} records but is truncated", offset=84 + 50 * whole)
    rec = np.frombuffer(data, dtype=_STL_RECORD, count=n, offset=84)
    tris = rec["v"].astype(np.float64)
    bad = ~np.isfinite(tris).reshape(n, -1).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise MeshParseError("non-finite vertex in binary STL", offset=84 + 50 * i + 12)
    return tris


def _parse_stl_ascii(data):
    tris = []
    verts = []
    offset = 0
    in_facet = False
    for raw in data.splitlines(keepends=True):
        line = raw.strip()
        toks = line.split()
        if toks:
            key = toks[0].lower()
            try:
                if key == b"facet":
                    if in_facet:
                        raise ValueError("nested facet")
                    in_facet = True
                    verts = []
                elif key == b"vertex":
                    if not in_facet or len(toks) != 4:
                        raise ValueError("malformed vertex record")
                    v = [float(t) for t in toks[1:]]
                    if not all(np.isfinite(v)):
                        raise ValueError("non-finite vertex")
                    verts.append(v)
                elif key == b"endfacet":
                    if not in_facet or len(verts) != 3:
                        raise ValueError(f"facet with {len(verts)} vertices")
                    tris.append(verts)
                    in_facet = False
                elif key not in (b"solid", b"endsolid", b"outer", b"endloop"):
                    raise ValueError(f"unexpected keyword {toks[0].decode(errors='replace')!r}")
            except ValueError as exc:
                raise MeshParseError(f"ASCII STL: {exc}", offset=offset) from None
        offset += len(raw)
    if in_facet:
        raise MeshParseError("ASCII STL ends inside a facet", offset=offset)
    return np.asarray(tris, dtype=np.float64).reshape(-1, 3, 3)


def _parse_obj(data):
    points = []
    faces = []
    offset = 0
    for raw in data.splitlines(keepends=True):
        toks = raw.split()
        try:
            if toks and toks[0] == b"v":
                if len(toks) < 4:
                    raise ValueError("vertex needs three coordinates")
                points.append([float(t) for t in toks[1:4]])
            elif toks and toks[0] == b"f":
                idx = []
                for t in toks[1:]:
                    i = int(t.split(b"/")[0])
                    # negative indices are relative to the vertices read so far
                    i = i - 1 if i > 0 else len(points) + i
                    if not 0 <= i < len(points):
                        raise ValueError(f"face index {t.decode()} out of range")
                    idx.append(i)
                if len(idx) < 3:
                    raise ValueError("face needs at least three vertices")
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
        except ValueError as exc:
            raise MeshParseError(f"OBJ: {exc}", offset=offset) from None
        offset += len(raw)
    if not faces:
        return np.empty((0, 3, 3))
    return np.asarray(points, dtype=np.float64)[np.asarray(faces)]


def save_stl(mesh, path, binary=True):
    path = Path(path)
    if binary:
        rec = np.zeros(mesh.n_faces, dtype=_STL_RECORD)
        rec["normal"] = mesh.normals
        rec["v"] = mesh.vertices
        header = (mesh.name or "arwplan").encode()[:80].ljust(80, b"\0")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", mesh.n_faces))
            fh.write(rec.tobytes())
        return
    lines = [f"solid {mesh.name or 'arwplan'}"]
    for n, tri in zip(mesh.normals, mesh.vertices):
        lines.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {mesh.name or 'arwplan'}")
    path.write_text("\n".join(lines) + "\n")


def weld(mesh, decimals=9):
    """Shared-vertex form: (points, faces) with coincident corners merged."""
    flat = mesh.vertices.reshape(-1, 3)
    keys = np.round(flat, decimals)
    # representative coordinates are the first original occurrence, not the rounded key
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return flat[first], inverse.reshape(-1, 3)


def save_obj(mesh, path):
    points, faces = weld(mesh)
    lines = [f"# {mesh.name or 'arwplan'}: {len(points)} vertices, {len(faces)} faces"]
    lines += [f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in points]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def save_mesh(mesh, path):
    ext = Path(path).suffix.lower()
    if ext == ".obj":
        save_obj(mesh, path)
    elif ext == ".stl":
        save_stl(mesh, path, binary=True)
    elif ext == ".ply":
        save_ply_mesh(mesh, path)
    else:
        raise ValueError(f"unsupported extension {ext!r}")


def save_ply_mesh(mesh, path):
    """ASCII PLY of the mesh, for debug dumps."""
    points, faces = weld(mesh)
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    out += [f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}" for p in points]
    out += [f"3 {a} {b} {c}" for a, b, c in faces]
    Path(path).write_text("\n".join(out) + "\n")


def save_ply_points(points, path, colors=None):
    """ASCII PLY point cloud, optionally with uchar RGB colors."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    out = ["ply", "format ascii 1.0", f"element vertex {len(points)}",
           "property float x", "property float y", "property float z"]
    if colors is not None:
        out += ["property uchar red", "property uchar green", "property uchar blue"]
    out.append("end_header")
    if colors is None:
        out += [f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}" for p in points]
    else:
        colors = np.asarray(colors, dtype=np.uint8).reshape(-1, 3)
        out += [f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {c[0]} {c[1]} {c[2]}" for p, c in zip(points, colors)]
    Path(path).write_text("\n".join(out) + "\n")
