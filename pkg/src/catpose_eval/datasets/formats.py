"""Readers and writers for OBJ meshes, PLY point sets and 16-bit PGM depth maps."""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from ..errors import ParseError, UnsupportedFormat
from ..sampling import TriMesh

MESH_SUFFIXES = (".obj",)
POINTSET_SUFFIXES = (".ply",)


def _fmt(x):
    # repr gives the shortest string that round-trips the double
    return repr(float(x))


def load_mesh(path) -> TriMesh:
    """Wavefront OBJ subset: ``v`` and ``f`` records, polygons fan-triangulated."""
    path = Path(path)
    if path.suffix.lower() not in MESH_SUFFIXES:
        raise UnsupportedFormat(f"{path}: unsupported mesh format {path.suffix!r}")
    vertices, triangles = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            if tag == "v":
                try:
                    xyz = [float(t) for t in rest[:3]]
                except ValueError as exc:
                    raise ParseError(f"bad vertex: {exc}", path, lineno) from exc
                if len(xyz) != 3:
                    raise ParseError("vertex needs 3 coordinates", path, lineno)
                if not all(np.isfinite(xyz)):
                    raise ParseError("non-finite vertex coordinate", path, lineno)
                vertices.append(xyz)
            elif tag == "f":
                try:
                    idx = [int(t.split("/", 1)[0]) for t in rest]
                except ValueError as exc:
                    raise ParseError(f"bad face index: {exc}", path, lineno) from exc
                if len(idx) < 3:
                    raise ParseError("face needs at least 3 vertices", path, lineno)
                n = len(vertices)
                idx = [i - 1 if i > 0 else n + i for i in idx]
                if any(i < 0 or i >= n for i in idx):
                    raise ParseError("face index out of range", path, lineno)
                for k in range(1, len(idx) - 1):
                    triangles.append((idx[0], idx[k], idx[k + 1]))
            # other records (vn, vt, o, g, s, usemtl, mtllib) carry nothing we need
    return TriMesh(np.array(vertices, dtype=float).reshape(-1, 3),
                   np.array(triangles, dtype=np.int64).reshape(-1, 3))


def save_mesh(path, mesh: TriMesh):
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_PLY_TYPES = {
    "float": "f", "float32": "f", "double": "d", "float64": "d",
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
}


def load_pointset(path) -> np.ndarray:
    """PLY vertices (x, y, z) as ``(n, 3)``; ascii and binary_little_endian bodies."""
    path = Path(path)
    if path.suffix.lower() not in POINTSET_SUFFIXES:
        raise UnsupportedFormat(f"{path}: unsupported point-set format {path.suffix!r}")
    data = path.read_bytes()
    if not data.startswith(b"ply"):
        raise ParseError("missing 'ply' magic", path, offset=0)
    end = data.find(b"end_header")
    if end < 0:
        raise ParseError("missing end_header", path)
    body_start = data.index(b"\n", end) + 1
    header = data[:end].decode("ascii", errors="replace").splitlines()
    fmt = None
    elements = []  # [name, count, [(prop_name, type)]]
    for lineno, line in enumerate(header, start=1):
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "obj_info"):
            continue
        if parts[0] == "format":
            fmt = parts[1] if len(parts) > 1 else None
        elif parts[0] == "element":
            try:
                elements.append([parts[1], int(parts[2]), []])
            except (IndexError, ValueError) as exc:
                raise ParseError(f"bad element line {line!r}", path, lineno) from exc
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before element", path, lineno)
            if parts[1] == "list":
                elements[-1][2].append((parts[-1], "list", parts[2], parts[3]))
            else:
                if parts[1] not in _PLY_TYPES:
                    raise ParseError(f"unknown property type {parts[1]!r}", path, lineno)
                elements[-1][2].append((parts[2], parts[1]))
        else:
            raise ParseError(f"unexpected header line {line!r}", path, lineno)
    if fmt not in ("ascii", "binary_little_endian"):
        raise UnsupportedFormat(f"{path}: PLY format {fmt!r} not supported")
    if not elements or elements[0][0] != "vertex":
        raise ParseError("first element must be 'vertex'", path)
    name, count, props = elements[0]
    names = [p[0] for p in props]
    if any(len(p) != 2 for p in props) or not {"x", "y", "z"} <= set(names):
        raise ParseError("vertex element needs scalar x, y, z properties", path)
    cols = [names.index(c) for c in ("x", "y", "z")]

    if fmt == "ascii":
        text = data[body_start:].decode("ascii", errors="replace").splitlines()
        first_line = len(header) + 2
        rows = []
        for k in range(count):
            if k >= len(text):
                raise ParseError(f"expected {count} vertices, found {k}", path, first_line + k)
            parts = text[k].split()
            if len(parts) < len(props):
                raise ParseError("short vertex record", path, first_line + k)
            try:
                rows.append([float(parts[c]) for c in cols])
            except ValueError as exc:
                raise ParseError(f"bad number: {exc}", path, first_line + k) from exc
        pts = np.array(rows, dtype=float).reshape(-1, 3)
    else:
        rec = struct.Struct("<" + "".join(_PLY_TYPES[p[1]] for p in props))
        need = rec.size * count
        if len(data) - body_start < need:
            raise ParseError(f"truncated binary body (need {need} bytes)", path,
                             offset=len(data))
        dtype = np.dtype([(p[0], "<" + _PLY_TYPES[p[1]]) for p in props])
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=body_start)
        pts = np.stack([arr[c].astype(float) for c in ("x", "y", "z")], axis=1)
    if not np.all(np.isfinite(pts)):
        raise ParseError("non-finite coordinate in point set", path)
    return pts


def save_pointset(path, pts):
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    head = ["ply", "format ascii 1.0", f"element vertex {len(pts)}",
            "property double x", "property double y", "property double z", "end_header"]
    body = [f"{_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in pts]
    Path(path).write_text("\n".join(head + body) + "\n", encoding="ascii")


def _pgm_tokens(data, pos, count, path):
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                while pos < n and data[pos:pos + 1] != b"\n":
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header", path, offset=start)
        try:
            out.append(int(data[start:pos]))
        except ValueError as exc:
            raise ParseError(f"bad PGM header token {data[start:pos]!r}", path, offset=start) from exc
    return out, pos


def load_depth_raw(path) -> np.ndarray:
    """Raw integer depth from a PGM (P5 binary, or P2 ascii)."""
    path = Path(path)
    data = path.read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise UnsupportedFormat(f"{path}: not a PGM file (magic {magic!r})")
    (width, height, maxval), pos = _pgm_tokens(data, 2, 3, path)
    if width <= 0 or height <= 0 or not 0 < maxval <= 65535:
        raise ParseError(f"bad PGM dimensions {width}x{height} maxval {maxval}", path, offset=pos)
    if magic == b"P2":
        vals, _ = _pgm_tokens(data, pos, width * height, path)
        return np.array(vals, dtype=np.uint16).reshape(height, width)
    pos += 1  # single whitespace byte after maxval
    bpp = 2 if maxval > 255 else 1
    need = width * height * bpp
    if len(data) - pos < need:
        raise ParseError(f"truncated PGM raster (need {need} bytes)", path, offset=len(data))
    dtype = ">u2" if bpp == 2 else "u1"
    return np.frombuffer(data, dtype=dtype, count=width * height, offset=pos).reshape(height, width).astype(np.uint16)


def load_depth(path, intr) -> np.ndarray:
    """Depth in meters: raw values times ``depth_scale``; raw 0 stays 0 (missing)."""
    raw = load_depth_raw(path)
    if raw.shape != (intr.height, intr.width):
        raise ParseError(f"depth is {raw.shape[1]}x{raw.shape[0]}, camera expects "
                         f"{intr.width}x{intr.height}", path)
    return raw.astype(float) * intr.depth_scale


def save_depth(path, depth_m, depth_scale):
    """Write meters as 16-bit P5 PGM (big-endian samples, maxval 65535)."""
    raw = np.rint(np.asarray(depth_m, dtype=float) / depth_scale)
    raw = np.clip(raw, 0, 65535).astype(">u2")
    h, w = raw.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(raw.tobytes())


def relative_path(target, start_dir):
    return Path(os.path.relpath(target, start_dir)).as_posix()
