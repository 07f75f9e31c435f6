"""Uniform-coverage inspection: every face seen from a similar distance and angle.

The structure is first decimated by vertex clustering. One viewpoint per face
is then drawn uniformly from the cap {distance in d* +- eps_d, angle from the
face normal <= eps_theta}; when the viewpoints cannot be joined into a tour
the whole set is redrawn.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .collision import MeshCollision
from .errors import InfeasibleTour, NoFeasibleSolution, NoUnoccludedSample, TargetTooSmall
from .geometry import Configuration, TriangleMesh
from .inspection import LegPlanner, assemble, cap_samples, verified_tour
from .mesh_io import weld
from .sensor import face_visible, face_visible_from

log = logging.getLogger(__name__)

MIN_FACES = 4
MAX_TRIES = 200


@dataclass(frozen=True)
class UniformityParams:
    d_target: float = 0.5
    eps_d: float = 0.1
    eps_theta: float = math.radians(20.0)
    target_faces: int = 0  # 0 keeps the mesh as is

    def __post_init__(self):
        if not self.eps_d > 0:
            raise ValueError("eps_d must be positive")
        if not 0.0 < self.eps_theta < math.pi / 2:
            raise ValueError("eps_theta must lie in (0, pi/2)")
        if not self.d_target > self.eps_d:
            raise ValueError("d_target must exceed eps_d")

    @classmethod
    def for_sensor(cls, sensor, **kw):
        kw.setdefault("d_target", sensor.d_min + 0.15)
        return cls(**kw)

    def check(self, sensor):
        if self.d_target < sensor.d_min:
            raise ValueError("d_target must be at least the sensor's d_min")


# -- decimation --------------------------------------------------------------

def _cluster(points, faces, lo, cell, offset):
    keys = np.floor((points - lo) / cell + offset).astype(np.int64)
    _, cid = np.unique(keys, axis=0, return_inverse=True)
    cid = cid.reshape(-1)
    n = cid.max() + 1
    rep = np.zeros((n, 3))
    np.add.at(rep, cid, points)
    rep /= np.bincount(cid, minlength=n)[:, None]
    f = cid[faces]
    keep = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    f = f[keep]
    # a face and its mirror image collapse onto each other: drop both
    srt = np.sort(f, axis=1)
    _, inv, cnt = np.unique(srt, axis=0, return_inverse=True, return_counts=True)
    f = f[cnt[inv.reshape(-1)] == 1]
    return rep, f


def euler_characteristic(faces):
    faces = np.asarray(faces)
    V = len(np.unique(faces))
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    E = len(np.unique(e, axis=0))
    return V - E + len(faces)


def is_closed_manifold(faces):
    faces = np.asarray(faces)
    if len(faces) == 0:
        return False
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    _, cnt = np.unique(e, axis=0, return_counts=True)
    return bool(np.all(cnt == 2))


def _area_ok(rep, f):
    tri = rep[f]
    return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1) > 1e-12


def subsample_mesh(mesh, target):
    """Vertex-clustering decimation to about ``target`` faces (within 20 %).

    The grid cell size is found by bisection. Several grid offsets are tried
    around the bracketing sizes and a closed manifold result is preferred when
    the input is one.
    """
    target = int(target)
    if target < MIN_FACES:
        raise TargetTooSmall(f"target of {target} faces is below the minimum of {MIN_FACES}")
    F = mesh.n_faces
    if target >= F:
        return mesh
    points, faces = weld(mesh)
    closed = is_closed_manifold(faces)
    lo = points.min(axis=0)
    lo_h, hi_h = 1e-9, float(np.linalg.norm(points.max(axis=0) - lo)) * 2.0
    band = (0.8 * target, 1.2 * target)
    found = []

    def attempt(h, off):
        rep, f = _cluster(points, faces, lo, h, off)
        if len(f):
            f = f[_area_ok(rep, f)]
        n = len(f)
        if band[0] <= n <= band[1]:
            good = (not closed) or (is_closed_manifold(f) and euler_characteristic(f) == 2)
            found.append((not good, abs(n - target), h, off, rep, f))
        return n

    for _ in range(60):
        h = math.sqrt(lo_h * hi_h)
        n = attempt(h, 0.0)
        if found and not found[-1][0]:
            break
        if n > target:
            lo_h = h
        else:
            hi_h = h
    if not found or found[0][0]:
        # widen the search around the bracket with shifted grids
        for s in np.linspace(0.85, 1.15, 13):
            for off in (0.25, 0.5, 0.75):
                attempt(math.sqrt(lo_h * hi_h) * s, off)
    if not found:
        raise TargetTooSmall(f"no grid size brings {F} faces into [{band[0]:.0f}, {band[1]:.0f}]")
    found.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    _, _, _, _, rep, f = found[0]
    return TriangleMesh(rep[f], name=f"{mesh.name}-decimated")


# -- viewpoints ---------------------------------------------------------------

def sample_uniform_viewpoint(mesh, face, params, sensor, rng, world=None, checker=None, clearance=0.0):
    """Uniform-cap viewpoint for ``face`` that sees it unoccluded; up to 200 draws."""
    world = mesh if world is None else world
    checker = checker or MeshCollision(world, clearance)
    c = mesh.centroids[face]
    offs, _ = cap_samples(rng, MAX_TRIES, mesh.normals[face], params.eps_theta,
                          params.d_target - params.eps_d, params.d_target + params.eps_d)
    P = c + offs
    # aim the camera's heading at the centroid; pitch is fixed by the sensor
    yaw = np.arctan2(-offs[:, 1], -offs[:, 0])
    ok = face_visible_from(sensor, P, yaw, mesh, face, occluder=world)
    for i in np.flatnonzero(ok):
        cfg = Configuration(float(P[i, 0]), float(P[i, 1]), float(P[i, 2]), float(yaw[i]))
        if checker.point_free(P[i]) and face_visible(sensor, cfg, mesh, face, occluder=world):
            return cfg
    raise NoUnoccludedSample(face)


def audit(mesh, viewpoints):
    """Per face: (viewing distance, angle between viewing ray and the inward normal)."""
    rows = []
    for f, v in enumerate(viewpoints):
        d = mesh.centroids[f] - np.asarray(v[:3])
        dist = float(np.linalg.norm(d))
        cosang = float(np.clip(-(d @ mesh.normals[f]) / dist, -1.0, 1.0))
        rows.append((f, dist, math.acos(cosang)))
    return rows


@dataclass
class Uc3dResult:
    path: object
    mesh: TriangleMesh
    viewpoints: list
    restarts_used: int
    audit: list = field(default_factory=list)


def plan_uniform_inspection(mesh, params, sensor, vehicle, max_restarts=20, seed=0, obstacles=None):
    """First restart whose uniform viewpoints join into a collision-free tour, optimized."""
    params.check(sensor)
    if params.target_faces:
        mesh = subsample_mesh(mesh, params.target_faces)
    world = mesh.merged(obstacles)
    checker = MeshCollision(world, vehicle.clearance)
    blocking_faces, blocking_legs = set(), set()
    for r in range(max_restarts):
        rng = np.random.default_rng([seed, r])
        vps, bad = [], []
        for f in range(mesh.n_faces):
            try:
                vps.append(sample_uniform_viewpoint(mesh, f, params, sensor, rng, world, checker))
            except NoUnoccludedSample:
                bad.append(f)
        if bad:
            blocking_faces.update(bad)
            log.info("restart %d: faces %s have no unoccluded sample", r, bad)
            continue
        legs = LegPlanner(vehicle, world)
        try:
            tour, done = verified_tour(vps, vehicle, legs, closed=True, seed=seed + r, search=False)
        except InfeasibleTour:
            blocked = sorted(k for k, v in legs.keyed.items() if v is None)
            blocking_legs.update(blocked)
            log.info("restart %d: %d blocked legs", r, len(blocked))
            continue
        path = assemble(vps, tour, done, sensor, mesh, world, (), {"restart": r})
        return Uc3dResult(path, mesh, vps, r + 1, audit(mesh, vps))
    raise NoFeasibleSolution(f"no feasible uniform tour in {max_restarts} restarts",
                             sorted(blocking_faces), sorted(blocking_legs))

