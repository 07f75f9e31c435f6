"""Routing among contact points on a planar surface.

Between two points the robot either slides along the surface around the
obstacle polygons (shortest path through the visibility graph) or undocks,
flies parallel to the surface at the clearance offset and redocks. Each leg
takes the cheaper mode; the visiting order comes from the tour solver.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from .tour import Tour, solve_tour

IN_CONTACT = "InContact"
UNDOCK_REDOCK = "UndockRedock"


@dataclass
class SurfaceTask:
    origin: tuple
    normal: tuple
    pois: list
    obstacles: list = field(default_factory=list)
    clearance: float = 0.3
    v_contact: float = 0.1
    v_flight: float = 0.5

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if np.linalg.norm(n) == 0:
            raise ValueError("surface normal must be non-zero")
        self.normal = tuple(n / np.linalg.norm(n))
        self.origin = tuple(float(v) for v in self.origin)
        self.pois = [tuple(map(float, p)) for p in self.pois]
        if not self.pois:
            raise ValueError("need at least one point of interest")
        if not (self.v_contact > 0 and self.v_flight > 0 and self.clearance >= 0):
            raise ValueError("speeds must be positive and clearance non-negative")
        self.polygons = []
        for k, ring in enumerate(self.obstacles):
            poly = Polygon(ring)
            if not poly.is_valid or poly.area <= 0:
                raise ValueError(f"obstacle {k} is not a simple polygon")
            self.polygons.append(poly)
        for i, p in enumerate(self.pois):
            for k, poly in enumerate(self.polygons):
                if poly.contains(Point(p)):
                    raise ValueError(f"point of interest {i} lies inside obstacle {k}")

    def basis(self):
        """Orthonormal in-plane axes (u, w) with u x w = normal."""
        n = np.asarray(self.normal)
        helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        u = np.cross(helper, n)
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        return u, w

    def to_3d(self, pts, offset=0.0):
        u, w = self.basis()
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        return np.asarray(self.origin) + pts[:, :1] * u + pts[:, 1:] * w + offset * np.asarray(self.normal)


@dataclass(frozen=True)
class Leg:
    src: int
    dst: int
    mode: str
    cost: float
    polyline: np.ndarray  # (N, 3) waypoints in world coordinates


def crosses_obstacle(task, a, b):
    """Does segment ab pass through the interior of an obstacle? Touching edges is allowed."""
    seg = LineString([a, b]) if tuple(a) != tuple(b) else Point(a)
    return any(seg.relate_pattern(poly, "T********") for poly in task.polygons)


class VisibilityGraph:
    """Visibility graph over the task's points of interest and obstacle corners."""

    def __init__(self, task):
        self.task = task
        nodes = list(task.pois)
        for poly in task.polygons:
            nodes += [tuple(c) for c in list(poly.exterior.coords)[:-1]]
        self.nodes = [tuple(map(float, p)) for p in nodes]
        n = len(self.nodes)
        self.adj = [[] for _ in range(n)]
        P = np.asarray(self.nodes)
        for i in range(n):
            for j in range(i + 1, n):
                if not crosses_obstacle(task, self.nodes[i], self.nodes[j]):
                    d = float(np.linalg.norm(P[i] - P[j]))
                    self.adj[i].append((j, d))
                    self.adj[j].append((i, d))

    def shortest(self, src):
        """Dijkstra from node ``src``: (dist, pred) lists."""
        n = len(self.nodes)
        dist = [math.inf] * n
        pred = [-1] * n
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in self.adj[u]:
                if d + w < dist[v]:
                    dist[v] = d + w
                    pred[v] = u
                    heapq.heappush(heap, (d + w, v))
        return dist, pred

    def route(self, pred, src, dst):
        chain = [dst]
        while chain[-1] != src:
            chain.append(pred[chain[-1]])
        return [self.nodes[k] for k in chain[::-1]]


def contact_length(task, p, q):
    """Shortest obstacle-avoiding surface distance between two 2D points, and its route."""
    sub = SurfaceTask(task.origin, task.normal, [p, q], task.obstacles, task.clearance,
                      task.v_contact, task.v_flight)
    g = VisibilityGraph(sub)
    dist, pred = g.shortest(0)
    if not math.isfinite(dist[1]):
        return math.inf, []
    return dist[1], g.route(pred, 0, 1)


def _choose(task, i, j, surf, route):
    p, q = task.pois[i], task.pois[j]
    t_contact = surf / task.v_contact
    planar = math.dist(p, q)
    t_fly = (2.0 * task.clearance + planar) / task.v_flight
    if t_contact <= t_fly:
        return Leg(i, j, IN_CONTACT, t_contact, task.to_3d(route))
    c = task.clearance
    pts = np.concatenate([task.to_3d([p]), task.to_3d([p], c), task.to_3d([q], c), task.to_3d([q])])
    return Leg(i, j, UNDOCK_REDOCK, t_fly, pts)


def leg_cost(task, p, q):
    """(cost in seconds, mode) of the cheaper way from surface point p to q."""
    surf, route = contact_length(task, p, q)
    sub = SurfaceTask(task.origin, task.normal, [p, q], task.obstacles, task.clearance,
                      task.v_contact, task.v_flight)
    leg = _choose(sub, 0, 1, surf, route)
    return leg.cost, leg.mode


def all_legs(task):
    """Cheapest leg for every ordered pair of points of interest."""
    g = VisibilityGraph(task)
    n = len(task.pois)
    legs = {}
    for i in range(n):
        dist, pred = g.shortest(i)
        for j in range(n):
            if i == j:
                continue
            route = g.route(pred, i, j) if math.isfinite(dist[j]) else []
            legs[(i, j)] = _choose(task, i, j, dist[j], route)
    return legs


@dataclass
class ContactTour:
    order: list
    legs: list
    cost: float
    matrix: np.ndarray = field(repr=False, default=None)


def plan_contact_tour(task, start=0, restarts=5, seed=0):
    """Open tour over the points of interest beginning at ``start``."""
    n = len(task.pois)
    if not 0 <= start < n:
        raise ValueError(f"start index {start} out of range")
    if n == 1:
        return ContactTour([start], [], 0.0, np.zeros((1, 1)))
    legs = all_legs(task)
    M = np.zeros((n, n))
    for (i, j), leg in legs.items():
        M[i, j] = leg.cost
    tour: Tour = solve_tour(M, closed=False, restarts=restarts, seed=seed, start=start)
    chosen = [legs[(a, b)] for a, b in tour.legs()]
    return ContactTour(list(tour.order), chosen, float(sum(leg.cost for leg in chosen)), M)
