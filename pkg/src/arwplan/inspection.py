"""Pieces shared by the three inspection planners: legs, coverage and the path type."""

import math
from dataclasses import dataclass, field

import numpy as np

from .collision import MeshCollision
from .errors import InfeasibleTour, NoPathWithinBudget
from .geometry import Configuration
from .path_search import Budget, chain_cost, plan_point_to_point, sampling_bounds, try_direct
from .sensor import visible_faces
from .tour import solve_tour
from .vehicle import connect, cost_matrix


@dataclass
class InspectionPath:
    """Ordered viewpoints and the legs joining them.

    ``legs[i]`` runs from ``viewpoints[i]`` to the next viewpoint (wrapping
    around for closed tours) as a list of configurations joined by local paths.
    """

    viewpoints: list
    legs: list
    leg_costs: list
    cost: float
    covered: frozenset
    faces_total: int
    excluded: tuple = ()
    closed: bool = True
    info: dict = field(default_factory=dict)

    @property
    def configurations(self):
        if not self.legs:
            return list(self.viewpoints)
        out = [self.legs[0][0]]
        for leg in self.legs:
            out.extend(leg[1:])
        return out

    def coverage_fraction(self):
        target = self.faces_total - len(self.excluded)
        return 1.0 if target <= 0 else len(self.covered) / target

    def samples(self, vehicle):
        """(N, 5) rows of estimated time, x, y, z, yaw along the executed path."""
        configs = self.configurations
        rows = [(0.0, *configs[0])]
        t = 0.0
        for a, b in zip(configs[:-1], configs[1:]):
            lp = connect(vehicle, a, b)
            n = len(lp.waypoints) - 1
            for i in range(1, n + 1):
                rows.append((t + lp.cost * i / n, *lp.waypoints[i]))
            t += lp.cost
        return np.asarray(rows, dtype=np.float64)


def covered_faces(sensor, mesh, configs, occluder=None):
    seen = np.zeros(mesh.n_faces, dtype=bool)
    for c in configs:
        seen |= visible_faces(sensor, c, mesh, occluder=occluder)
    return frozenset(np.flatnonzero(seen).tolist())


def cap_samples(rng, n, normal, max_angle, d_lo, d_hi):
    """``n`` offsets from a face: direction uniform on the cap of half-angle ``max_angle``
    around ``normal``, distance uniform in [d_lo, d_hi]."""
    normal = np.asarray(normal, dtype=np.float64)
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    cos_t = rng.uniform(math.cos(max_angle), 1.0, n)
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t * cos_t))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    dirs = (cos_t[:, None] * normal + (sin_t * np.cos(phi))[:, None] * e1
            + (sin_t * np.sin(phi))[:, None] * e2)
    dist = rng.uniform(d_lo, d_hi, n)
    return dirs * dist[:, None], dist


class LegPlanner:
    """Collision-free legs between configurations: direct connection, else RRT*.

    Results are cached per ordered pair. The RRT* fallback seeds from
    ``(seed, *key)`` so the outcome of a leg does not depend on query order.
    """

    def __init__(self, vehicle, world, bounds=None, budget=None, seed=0):
        self.vehicle = vehicle
        self.world = world
        self.checker = MeshCollision(world, vehicle.clearance)
        self.bounds = bounds
        self.budget = budget or Budget(max_iterations=400)
        self.seed = seed
        self._cache = {}
        self.keyed = {}  # key -> result, for diagnostics

    def plan(self, a, b, key=(), search=True):
        """(configs, cost) for a collision-free leg a -> b, or None."""
        ck = (a, b, search)
        if ck in self._cache:
            self.keyed[key] = self._cache[ck]
            return self._cache[ck]
        out = None
        lp = try_direct(self.vehicle, self.world, a, b, self.checker)
        if lp is not None:
            out = ([a, b], lp.cost)
        elif search:
            bounds = self.bounds or sampling_bounds(self.world, a, b)
            try:
                res = plan_point_to_point(self.vehicle, self.world, a, b, self.budget,
                                          checker=self.checker, bounds=bounds, allow_direct=False,
                                          rng=np.random.default_rng([self.seed, *key]))
                out = (list(res.path), res.cost)
            except NoPathWithinBudget:
                out = None
        self._cache[ck] = out
        self.keyed[key] = out
        if self.vehicle.holonomic and out is not None:
            # holonomic legs are reversible at equal cost
            self._cache.setdefault((b, a, search), (out[0][::-1], out[1]))
        return out


def verified_tour(configs, vehicle, legs, closed=True, start=None, restarts=5, seed=0, search=True):
    """Tour over ``configs`` whose every used leg is collision-free.

    Starts from the optimistic direct-connection cost matrix (a lower bound on
    any leg) and replaces the entries of the legs the current tour uses with
    their verified cost, re-solving until the tour only uses verified legs.
    Returns (Tour, {(i, j): (configs, cost)}).
    """
    n = len(configs)
    M = cost_matrix(vehicle, configs).astype(np.float64)
    done = {}
    while True:
        tour = solve_tour(M, closed=closed, restarts=restarts, seed=seed, start=start)
        pending = [(i, j) for i, j in tour.legs() if (i, j) not in done]
        if not pending:
            return tour, done
        for i, j in pending:
            r = legs.plan(configs[i], configs[j], key=(i, j), search=search)
            done[(i, j)] = r
            M[i, j] = math.inf if r is None else r[1]
            if vehicle.holonomic and (j, i) not in done:
                done[(j, i)] = None if r is None else (r[0][::-1], r[1])
                M[j, i] = M[i, j]
        if n > 1 and not np.isfinite(M).any(axis=1).all():
            # some node can no longer be left: no finite tour exists
            raise InfeasibleTour("a viewpoint has no collision-free leg to any other")


def assemble(viewpoints, tour, legs, sensor, mesh, occluder, excluded=(), info=None):
    """InspectionPath for ``tour`` over ``viewpoints`` with verified ``legs``."""
    vps = [viewpoints[i] for i in tour.order]
    leg_cfgs, leg_costs = [], []
    for i, j in tour.legs():
        cfgs, c = legs[(i, j)]
        leg_cfgs.append(list(cfgs))
        leg_costs.append(float(c))
    path = InspectionPath(vps, leg_cfgs, leg_costs, float(sum(leg_costs)),
                          frozenset(), mesh.n_faces, tuple(sorted(excluded)), tour.closed, dict(info or {}))
    path.covered = covered_faces(sensor, mesh, path.configurations, occluder)
    return path


def leg_cost(vehicle, cfgs):
    return chain_cost(vehicle, cfgs)


def as_config(c):
    return c if isinstance(c, Configuration) else Configuration(*map(float, c))
