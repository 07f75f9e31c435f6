"""Structural inspection planning over a known mesh.

Each iteration resamples one viewpoint per face, preferring samples that are
cheap to reach from the face's tour neighbours, then re-solves the tour over
the new viewpoints. The cheapest tour seen so far is kept.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .collision import MeshCollision
from .errors import FaceInfeasible, InfeasibleTour, NoPathWithinBudget
from .geometry import Configuration, wrap_angle
from .inspection import LegPlanner, assemble, cap_samples, verified_tour
from .kernels import tour as tk
from .path_search import sampling_bounds
from .sensor import face_visible, face_visible_from
from .vehicle import connect_cost

log = logging.getLogger(__name__)

N_SAMPLES = 60
MAX_DRAW_FACTOR = 10


def _sample_batch(rng, sensor, mesh, face, n):
    c = mesh.centroids[face]
    offs, _ = cap_samples(rng, n, mesh.normals[face], sensor.max_incidence, sensor.d_min, sensor.d_max)
    P = c + offs
    aim = np.arctan2(-offs[:, 1], -offs[:, 0])
    yaw = aim + rng.uniform(-0.25 * sensor.hfov, 0.25 * sensor.hfov, n)
    yaw = (yaw + math.pi) % (2.0 * math.pi) - math.pi
    return P, yaw


def feasible_samples(sensor, vehicle, mesh, face, rng, world=None, n=N_SAMPLES, checker=None):
    """Up to ``n`` collision-free configurations that see ``face``, drawn in at most 10 n tries."""
    world = mesh if world is None else world
    checker = checker or MeshCollision(world, vehicle.clearance)
    found = []
    drawn = 0
    while len(found) < n and drawn < MAX_DRAW_FACTOR * n:
        P, yaw = _sample_batch(rng, sensor, mesh, face, n)
        drawn += n
        ok = face_visible_from(sensor, P, yaw, mesh, face, occluder=world)
        idx = np.flatnonzero(ok)
        if len(idx):
            free = checker.segments_free(P[idx], P[idx])
            idx = idx[free]
        for i in idx:
            found.append(Configuration(float(P[i, 0]), float(P[i, 1]), float(P[i, 2]), wrap_angle(yaw[i])))
            if len(found) == n:
                break
    return found


def neighbor_cost(vehicle, config, neighbors):
    return sum(connect_cost(vehicle, nb, config) if k == 0 else connect_cost(vehicle, config, nb)
               for k, nb in enumerate(neighbors) if nb is not None)


def sample_viewpoint_for_face(sensor, vehicle, mesh, face, previous=None, neighbors=(None, None),
                              rng=None, world=None, n=N_SAMPLES, checker=None):
    """Viewpoint for ``face`` minimizing the connect cost from the previous and to the next neighbour.

    ``neighbors`` is (predecessor, successor) in the current tour; either may
    be None. The previous viewpoint, when given and still valid, competes with
    the fresh samples, so a face's neighbour cost never gets worse.
    """
    rng = rng if rng is not None else np.random.default_rng()
    world = mesh if world is None else world
    cands = feasible_samples(sensor, vehicle, mesh, face, rng, world, n, checker)
    if previous is not None:
        cands.append(previous)
    scored = sorted(((neighbor_cost(vehicle, c, neighbors), k) for k, c in enumerate(cands)))
    for _, k in scored:
        # the batched test and the scalar one agree up to rounding; the scalar one is the contract
        if face_visible(sensor, cands[k], mesh, face, occluder=world):
            return cands[k]
    raise FaceInfeasible(face)


@dataclass
class SipResult:
    path: object
    history: list
    excluded: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _centroid_order(mesh, faces):
    C = mesh.centroids[faces]
    D = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=2)
    return [faces[i] for i in tk.nearest_neighbor(D, 0)]


def plan_inspection(mesh, sensor, vehicle, obstacles=None, iterations=10, seed=0, n_samples=N_SAMPLES,
                    leg_budget=None, restarts=5):
    """Iterative viewpoint resampling and tour optimization; returns SipResult.

    ``history[k]`` is the best tour cost after iteration k.
    """
    rng = np.random.default_rng(seed)
    world = mesh.merged(obstacles)
    checker = MeshCollision(world, vehicle.clearance)
    faces = list(range(mesh.n_faces))
    bounds = sampling_bounds(world, margin=1.0 + sensor.d_min)
    legs_seed = int(rng.integers(2 ** 31))
    excluded, warnings = [], []
    vp = {}
    order = _centroid_order(mesh, faces)
    best, history = None, []

    for it in range(iterations):
        active = [f for f in order if f not in excluded]
        for pos, f in enumerate(active):
            prev = vp.get(active[pos - 1]) if len(active) > 1 else None
            nxt = vp.get(active[(pos + 1) % len(active)]) if len(active) > 2 else None
            try:
                vp[f] = sample_viewpoint_for_face(sensor, vehicle, mesh, f, vp.get(f), (prev, nxt),
                                                  rng, world, n_samples, checker)
            except FaceInfeasible as e:
                excluded.append(f)
                warnings.append(str(e))
                log.warning("%s; face excluded", e)
        active = [f for f in active if f not in excluded]
        if not active:
            break
        configs = [vp[f] for f in active]
        legs = LegPlanner(vehicle, world, bounds, leg_budget, seed=legs_seed + 7919 * it)
        try:
            tour, done = verified_tour(configs, vehicle, legs, closed=True, restarts=restarts,
                                       seed=legs_seed + it)
        except InfeasibleTour as e:
            raise NoPathWithinBudget(f"iteration {it}: viewpoints could not be joined into a tour ({e})")
        path = assemble(configs, tour, done, sensor, mesh, world, excluded,
                        {"faces": [active[i] for i in tour.order], "iteration": it})
        if best is None or path.cost < best.cost:
            best = path
        history.append(best.cost)
        order = [active[i] for i in tour.order] + [f for f in excluded]
    if best is None:
        raise FaceInfeasible(excluded[0] if excluded else -1, "every face is infeasible")
    best.excluded = tuple(sorted(excluded))
    return SipResult(best, history, sorted(excluded), warnings)
