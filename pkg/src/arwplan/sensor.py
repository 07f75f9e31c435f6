"""Camera frustum with range and incidence limits.

Body frame is x forward, y left, z up. The camera is rotated by ``pitch``
about the body y axis (negative pitch looks down) and then by the vehicle yaw
about world z.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, ray_cast_many

# a face's own centroid sits at exactly the view distance; anything hit within
# this tolerance of it counts as the face itself (or a neighbour sharing an edge)
SHARED_EDGE_TOL = 1e-6


@dataclass(frozen=True)
class SensorModel:
    hfov: float = math.radians(90.0)
    vfov: float = math.radians(60.0)
    d_min: float = 0.35
    d_max: float = 5.0
    max_incidence: float = math.radians(72.0)
    pitch: float = math.radians(-15.0)

    def __post_init__(self):
        if not 0.0 < self.hfov < math.pi or not 0.0 < self.vfov < math.pi:
            raise ValueError("fields of view must lie in (0, pi)")
        if not 0.0 <= self.d_min < self.d_max:
            raise ValueError("need 0 <= d_min < d_max")
        if not 0.0 < self.max_incidence <= math.pi / 2:
            raise ValueError("max_incidence must lie in (0, pi/2]")
        if not math.isfinite(self.pitch):
            raise ValueError("pitch must be finite")

    def axes(self, yaw):
        """World-frame (forward, left, up) unit vectors of the camera at ``yaw``."""
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cy, sy = math.cos(yaw), math.sin(yaw)
        fwd = np.array([cp * cy, cp * sy, sp])
        left = np.array([-sy, cy, 0.0])
        up = np.array([-sp * cy, -sp * sy, cp])
        return fwd, left, up

    def in_frustum(self, config, points, check_range=True):
        """Boolean mask: which points fall inside the viewing pyramid (and range band)."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        d = pts - config.position
        fwd, left, up = self.axes(config.yaw)
        xf = d @ fwd
        yl = d @ left
        zu = d @ up
        ok = (xf > 0.0)
        ok &= np.abs(np.arctan2(yl, xf)) <= 0.5 * self.hfov
        ok &= np.abs(np.arctan2(zu, xf)) <= 0.5 * self.vfov
        if check_range:
            dist = np.sqrt(np.einsum("ij,ij->i", d, d))
            ok &= (dist >= self.d_min) & (dist <= self.d_max)
        return ok

    def ray_grid(self, yaw, rays_h, rays_v):
        """Unit directions on a uniform angular grid spanning the frustum."""
        if rays_h < 2 or rays_v < 2:
            raise ValueError("ray grid must be at least 2x2")
        az = np.linspace(-0.5 * self.hfov, 0.5 * self.hfov, rays_h)
        el = np.linspace(-0.5 * self.vfov, 0.5 * self.vfov, rays_v)
        A, E = np.meshgrid(az, el, indexing="ij")
        cam = np.stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)], axis=-1).reshape(-1, 3)
        fwd, left, up = self.axes(yaw)
        return cam @ np.stack([fwd, left, up])


def face_conditions(sensor, config, mesh, faces=None):
    """Per-face (frustum, range, incidence) masks, without the occlusion test."""
    faces = np.arange(mesh.n_faces) if faces is None else np.asarray(faces, dtype=np.int64)
    c = mesh.centroids[faces]
    n = mesh.normals[faces]
    d = c - config.position
    dist = np.sqrt(np.einsum("ij,ij->i", d, d))
    frustum = sensor.in_frustum(config, c, check_range=False)
    rng = (dist >= sensor.d_min) & (dist <= sensor.d_max)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_inc = -np.einsum("ij,ij->i", d, n) / dist
    incidence = cos_inc >= math.cos(sensor.max_incidence)
    return frustum, rng, incidence, dist


def visible_faces(sensor, config, mesh, faces=None, occluder=None):
    """Boolean mask over ``faces`` (default: all) of faces seen from ``config``.

    ``occluder`` is the mesh rays are cast against; it defaults to ``mesh`` and
    must list ``mesh``'s faces first when it also contains obstacles.
    """
    faces = np.arange(mesh.n_faces) if faces is None else np.asarray(faces, dtype=np.int64)
    frustum, rng, incidence, dist = face_conditions(sensor, config, mesh, faces)
    ok = frustum & rng & incidence
    idx = np.flatnonzero(ok)
    if len(idx):
        occ = mesh if occluder is None else occluder
        origin = config.position
        dirs = (mesh.centroids[faces[idx]] - origin) / dist[idx, None]
        t, _ = ray_cast_many(occ, np.broadcast_to(origin, dirs.shape), dirs, dist[idx] - SHARED_EDGE_TOL)
        ok[idx] = ~np.isfinite(t)
    return ok


def face_visible(sensor, config, mesh, face, occluder=None):
    return bool(visible_faces(sensor, config, mesh, [face], occluder)[0])


def visible_set(sensor, config, mesh, occluder=None):
    """Set of face indices visible from ``config``."""
    return set(np.flatnonzero(visible_faces(sensor, config, mesh, occluder=occluder)).tolist())


def points_visible(sensor, config, points, occluder=None):
    """Which 3D points are inside the frustum/range band and unoccluded by ``occluder``.

    ``occluder`` may be a TriangleMesh or any object with a
    ``line_of_sight(origin, targets) -> bool array`` method.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    ok = sensor.in_frustum(config, pts)
    idx = np.flatnonzero(ok)
    if len(idx) and occluder is not None:
        origin = config.position
        if hasattr(occluder, "line_of_sight"):
            ok[idx] = occluder.line_of_sight(origin, pts[idx])
        else:
            d = pts[idx] - origin
            dist = np.linalg.norm(d, axis=1)
            t, _ = ray_cast_many(occluder, np.broadcast_to(origin, d.shape), d / dist[:, None],
                                 dist - SHARED_EDGE_TOL)
            ok[idx] = ~np.isfinite(t)
    return ok


@dataclass(frozen=True)
class Scan:
    """One simulated depth scan: per-ray direction and range (inf = no return)."""

    origin: np.ndarray
    directions: np.ndarray
    ranges: np.ndarray
    max_range: float

    @property
    def hit_mask(self):
        return np.isfinite(self.ranges)

    def hit_points(self):
        return self.origin + self.directions * np.where(self.hit_mask, self.ranges, 0.0)[:, None]

    def points(self):
        """List with a hit point per ray, or None where the ray returned nothing."""
        pts = self.hit_points()
        return [p if h else None for p, h in zip(pts, self.hit_mask)]


def simulate_scan(sensor, config: Configuration, world, rays_h, rays_v):
    """Cast a uniform angular grid of rays into ``world`` up to ``d_max``."""
    dirs = sensor.ray_grid(config.yaw, rays_h, rays_v)
    origin = config.position
    if world is None:
        ranges = np.full(len(dirs), np.inf)
    else:
        ranges, _ = ray_cast_many(world, np.broadcast_to(origin, dirs.shape), dirs, sensor.d_max)
    return Scan(origin, dirs, ranges, sensor.d_max)


def face_visible_from(sensor, positions, yaws, mesh, face, occluder=None):
    """Visibility of one ``face`` from many poses; same four tests as ``visible_faces``."""
    P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    yaws = np.asarray(yaws, dtype=np.float64).reshape(-1)
    c = mesh.centroids[face]
    n = mesh.normals[face]
    d = c - P
    dist = np.sqrt(np.einsum("ij,ij->i", d, d))
    cp, sp = math.cos(sensor.pitch), math.sin(sensor.pitch)
    cy, sy = np.cos(yaws), np.sin(yaws)
    xf = d[:, 0] * (cp * cy) + d[:, 1] * (cp * sy) + d[:, 2] * sp
    yl = d[:, 0] * (-sy) + d[:, 1] * cy
    zu = d[:, 0] * (-sp * cy) + d[:, 1] * (-sp * sy) + d[:, 2] * cp
    ok = xf > 0.0
    ok &= np.abs(np.arctan2(yl, xf)) <= 0.5 * sensor.hfov
    ok &= np.abs(np.arctan2(zu, xf)) <= 0.5 * sensor.vfov
    ok &= (dist >= sensor.d_min) & (dist <= sensor.d_max)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok &= (-(d @ n) / dist) >= math.cos(sensor.max_incidence)
    idx = np.flatnonzero(ok)
    if len(idx):
        occ = mesh if occluder is None else occluder
        t, _ = ray_cast_many(occ, P[idx], d[idx] / dist[idx, None], dist[idx] - SHARED_EDGE_TOL)
        ok[idx] = ~np.isfinite(t)
    return ok
