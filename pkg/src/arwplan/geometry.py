"""Configurations, triangle meshes and exact ray / capsule queries."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from . import _accel
from .bvh import build_bvh
from .errors import EmptyMeshError
from .kernels import raycast as rk

RAY_EPS = rk.RAY_EPS
# extra reach on capsule tests: a segment at exactly `clearance` counts as touching
CLEARANCE_SLACK = 1e-6
AREA_EPS = 1e-12


def vec3(x, y=None, z=None):
    """Finite float64 3-vector from a sequence or three scalars."""
    v = np.asarray([x, y, z] if y is not None else x, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


def wrap_angle(a):
    """Map an angle to [-pi, pi)."""
    w = (a + math.pi) % (2.0 * math.pi) - math.pi
    # fmod can round up to exactly pi for inputs a hair below pi
    return -math.pi if w >= math.pi else w


class Configuration(NamedTuple):
    """Viewpoint state: position in meters and yaw in radians."""

    x: float
    y: float
    z: float
    yaw: float = 0.0

    @classmethod
    def make(cls, position, yaw=0.0):
        p = vec3(position)
        if not math.isfinite(yaw):
            raise ValueError("yaw must be finite")
        return cls(float(p[0]), float(p[1]), float(p[2]), wrap_angle(float(yaw)))

    @property
    def position(self):
        return np.array([self.x, self.y, self.z])

    def with_yaw(self, yaw):
        return Configuration(self.x, self.y, self.z, wrap_angle(yaw))

    def distance(self, other):
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    max_range: float = math.inf

    def __post_init__(self):
        o = vec3(self.origin)
        d = vec3(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        if not self.max_range > 0:
            raise ValueError("max_range must be positive")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    @classmethod
    def through(cls, origin, target, max_range=None):
        o = vec3(origin)
        d = vec3(target) - o
        n = np.linalg.norm(d)
        return cls(o, d / n, n if max_range is None else max_range)


class Hit(NamedTuple):
    t: float
    face: int
    point: np.ndarray


@dataclass(frozen=True)
class Triangle:
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    normal: np.ndarray
    centroid: np.ndarray
    area: float


@dataclass(eq=False)
class TriangleMesh:
    """Immutable triangle soup with per-face normal, centroid, area and a lazy BVH.

    ``vertices`` has shape (F, 3, 3). Construction drops zero-area faces and
    records how many were dropped in ``dropped_faces``.
    """

    vertices: np.ndarray
    dropped_faces: int = 0
    name: str = ""
    normals: np.ndarray = field(init=False, repr=False)
    centroids: np.ndarray = field(init=False, repr=False)
    areas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tris = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3, 3)
        if not np.all(np.isfinite(tris)):
            raise ValueError("mesh vertices must be finite")
        cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        keep = 0.5 * norm > AREA_EPS
        self.dropped_faces += int((~keep).sum())
        tris = np.ascontiguousarray(tris[keep])
        if len(tris) == 0:
            raise EmptyMeshError("mesh has no non-degenerate faces")
        tris.setflags(write=False)
        self.vertices = tris
        self.normals = cross[keep] / norm[keep, None]
        self.centroids = tris.mean(axis=1)
        self.areas = 0.5 * norm[keep]
        for a in (self.normals, self.centroids, self.areas):
            a.setflags(write=False)

    @classmethod
    def from_indexed(cls, points, faces, name=""):
        points = np.asarray(points, dtype=np.float64)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        return cls(points[faces], name=name)

    @property
    def n_faces(self):
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    @property
    def v0(self):
        return self.vertices[:, 0]

    @property
    def v1(self):
        return self.vertices[:, 1]

    @property
    def v2(self):
        return self.vertices[:, 2]

    @cached_property
    def bounds(self):
        pts = self.vertices.reshape(-1, 3)
        return pts.min(axis=0), pts.max(axis=0)

    @property
    def total_area(self):
        return float(self.areas.sum())

    def triangle(self, i):
        v = self.vertices[i]
        return Triangle(v[0], v[1], v[2], self.normals[i], self.centroids[i], float(self.areas[i]))

    @cached_property
    def bvh(self):
        return build_bvh(
            np.ascontiguousarray(self.v0), np.ascontiguousarray(self.v1), np.ascontiguousarray(self.v2)
        )

    def merged(self, other):
        """Faces of ``self`` followed by faces of ``other`` (indices of self preserved)."""
        if other is None or len(other) == 0:
            return self
        return TriangleMesh(np.concatenate([self.vertices, other.vertices]), name=self.name)


def ray_cast_many(mesh, origins, dirs, max_range=math.inf):
    """Nearest hit per ray: returns (t, face) arrays, t=inf and face=-1 on a miss."""
    origins = np.ascontiguousarray(np.asarray(origins, dtype=np.float64).reshape(-1, 3))
    dirs = np.ascontiguousarray(np.asarray(dirs, dtype=np.float64).reshape(-1, 3))
    tmax = np.broadcast_to(np.asarray(max_range, dtype=np.float64), (len(origins),)).copy()
    if len(origins) == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if _accel.USE_NUMBA:
        b = mesh.bvh
        return rk.ray_cast_batch(*b.node_arrays(), b.order, b.tv0, b.tv1, b.tv2, origins, dirs, tmax)
    return rk.ray_cast_all_faces(mesh.v0, mesh.v1, mesh.v2, origins, dirs, tmax)


def ray_cast(mesh, ray: Ray) -> Optional[Hit]:
    t, f = ray_cast_many(mesh, ray.origin[None], ray.direction[None], ray.max_range)
    if f[0] < 0:
        return None
    return Hit(float(t[0]), int(f[0]), ray.origin + t[0] * ray.direction)


def segments_collide(mesh, a, b, clearance):
    """Vectorized capsule test for segment pairs a[i]-b[i]."""
    if clearance < 0:
        raise ValueError("clearance must be non-negative")
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1, 3))
    b = np.ascontiguousarray(np.asarray(b, dtype=np.float64).reshape(-1, 3))
    if mesh is None:
        return np.zeros(len(a), dtype=bool)
    bv = mesh.bvh
    return rk.segments_collide_batch(
        *bv.node_arrays(), bv.tv0, bv.tv1, bv.tv2, a, b, clearance + CLEARANCE_SLACK
    )


def segment_collides(mesh, a, b, clearance):
    """True iff some mesh point lies within ``clearance`` of segment ab."""
    return bool(segments_collide(mesh, a, b, clearance)[0])


def polyline_collides(mesh, points, clearance):
    if mesh is None:
        return False
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    bv = mesh.bvh
    return bool(
        rk.polyline_collides(*bv.node_arrays(), bv.tv0, bv.tv1, bv.tv2, pts, clearance + CLEARANCE_SLACK)
    )


def segment_triangle_distance(a, b, tri_vertices):
    """Exact distance between segment ab and one triangle (3x3 array)."""
    a = vec3(a)
    b = vec3(b)
    t = np.asarray(tri_vertices, dtype=np.float64)
    return math.sqrt(rk.segment_triangle_dist2(a[0], a[1], a[2], b[0], b[1], b[2], t[0], t[1], t[2]))
