"""Procedural meshes for scenarios and tests."""

import numpy as np

from .geometry import TriangleMesh


def quad(a, b, c, d):
    """Two triangles for the planar quad a-b-c-d (counter-clockwise seen from the normal side)."""
    return [(a, b, c), (a, c, d)]


def box(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0), inward=False, skip=(), name="box"):
    """Axis-aligned box of 12 triangles; ``skip`` drops faces by side name.

    Side names are ``-x +x -y +y -z +z``. With ``inward=True`` normals point into
    the box (a room seen from inside).
    """
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    p = {
        "000": (x0, y0, z0), "100": (x1, y0, z0), "110": (x1, y1, z0), "010": (x0, y1, z0),
        "001": (x0, y0, z1), "101": (x1, y0, z1), "111": (x1, y1, z1), "011": (x0, y1, z1),
    }
    sides = {
        "-z": ("000", "010", "110", "100"),
        "+z": ("001", "101", "111", "011"),
        "-y": ("000", "100", "101", "001"),
        "+y": ("010", "011", "111", "110"),
        "-x": ("000", "001", "011", "010"),
        "+x": ("100", "110", "111", "101"),
    }
    tris = []
    for side in ("-x", "+x", "-y", "+y", "-z", "+z"):
        if side in skip:
            continue
        k = sides[side]
        if inward:
            k = k[::-1]
        tris += quad(*(p[i] for i in k))
    return TriangleMesh(np.asarray(tris, dtype=np.float64), name=name)


def unit_cube(name="cube"):
    return box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), name=name)


def cylinder(radius=1.0, height=2.0, segments=40, rows=2, cap_top=True, cap_bottom=False,
             center=(0.0, 0.0, 0.0), name="cylinder"):
    """Outward-facing cylinder standing on z = center[2].

    Face count: 2 * segments * rows plus ``segments`` per cap.
    """
    cx, cy, cz = center
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)
    zs = cz + height * np.arange(rows + 1) / rows
    tris = []
    for r in range(rows):
        for i in range(segments):
            j = (i + 1) % segments
            a = (*ring[i], zs[r])
            b = (*ring[j], zs[r])
            c = (*ring[j], zs[r + 1])
            d = (*ring[i], zs[r + 1])
            tris += quad(a, b, c, d)
    top = (cx, cy, zs[-1])
    bot = (cx, cy, zs[0])
    for i in range(segments):
        j = (i + 1) % segments
        if cap_top:
            tris.append((top, (*ring[i], zs[-1]), (*ring[j], zs[-1])))
        if cap_bottom:
            tris.append((bot, (*ring[j], zs[0]), (*ring[i], zs[0])))
    return TriangleMesh(np.asarray(tris, dtype=np.float64), name=name)


def icosphere(subdivisions=3, radius=1.0, center=(0.0, 0.0, 0.0), name="sphere"):
    """Geodesic sphere with 20 * 4**subdivisions outward-facing faces."""
    t = (1.0 + 5.0 ** 0.5) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    pts = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh.from_indexed(pts, faces, name=name)


def wall(x, y0, y1, z0, z1, name="wall"):
    """Vertical wall in the plane x = const, facing -x and +x (two-sided)."""
    a, b, c, d = (x, y0, z0), (x, y1, z0), (x, y1, z1), (x, y0, z1)
    tris = quad(a, d, c, b) + quad(a, b, c, d)
    return TriangleMesh(np.asarray(tris, dtype=np.float64), name=name)


def wall_with_gap(x, y0, y1, gap_lo, gap_hi, z0, z1, name="gapwall"):
    """Wall at x = const spanning [y0, y1] with a full-height opening [gap_lo, gap_hi]."""
    parts = [wall(x, y0, gap_lo, z0, z1).vertices, wall(x, gap_hi, y1, z0, z1).vertices]
    return TriangleMesh(np.concatenate(parts), name=name)


def combine(*meshes, name="combined"):
    parts = [m.vertices for m in meshes if m is not None]
    return TriangleMesh(np.concatenate(parts), name=name)
