"""Receding-horizon next-best-view exploration.

Each step scans, grows a random tree of views through space the map already
knows to be Free, scores every branch by discounted expected new volume and
moves along the first edge of the best one.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RootNotFree
from .geometry import Configuration, wrap_angle
from .occupancy import MapCollision, OccupancyMap
from .sensor import simulate_scan
from .vehicle import connect_cost

log = logging.getLogger(__name__)

LAMBDA = 0.25
G_MIN = 0.05
N_NODES = 60
MAX_EDGE = 1.0
ATTEMPTS_PER_NODE = 40


def node_gain(omap, config, sensor, states=None):
    """Expected new volume (m^3): visible Unknown voxels times voxel volume."""
    return omap.count_unknown_visible(config, sensor, states) * omap.voxel_volume


@dataclass
class ViewTree:
    configs: list
    parent: list
    edge_cost: list
    cost: list  # cost-to-come
    gain: list
    value: list
    lam: float = LAMBDA

    def __len__(self):
        return len(self.configs)

    def best(self):
        """Index of the node with the highest branch value (lowest index on ties)."""
        return int(np.argmax(self.value))

    def first_step(self, idx):
        """Child of the root on the branch to ``idx``; -1 for the root itself."""
        if idx == 0:
            return -1
        while self.parent[idx] != 0:
            idx = self.parent[idx]
        return idx

    def recompute_values(self):
        out = [0.0] * len(self)
        for i in range(len(self)):
            p = self.parent[i]
            if p < 0:
                out[i] = self.gain[i]
            else:
                out[i] = out[p] + self.gain[i] * math.exp(-self.lam * self.cost[i])
        return out


def _steer(src, target, max_edge):
    p0 = np.array(src[:3])
    d = np.array(target[:3]) - p0
    dist = float(np.linalg.norm(d))
    if dist > max_edge:
        d *= max_edge / dist
    p = p0 + d
    return Configuration(float(p[0]), float(p[1]), float(p[2]), target.yaw)


def build_view_tree(omap, vehicle, sensor, root, n_nodes=N_NODES, max_edge=MAX_EDGE, rng=None,
                    lam=LAMBDA, gain_fn=None, checker=None):
    """RRT-style tree of views restricted to Free space.

    ``gain_fn(config, states)`` overrides the node gain (default: ``node_gain``).
    Returns fewer than ``n_nodes`` nodes, with a warning, when the free space
    does not admit them within the attempt budget.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    checker = checker or MapCollision(omap, vehicle.clearance)
    states = omap.states()
    if gain_fn is None:
        def gain_fn(c, st):
            return node_gain(omap, c, sensor, st)
    if not checker.point_free(root[:3]):
        raise RootNotFree(f"root {tuple(round(v, 3) for v in root)} is not in Free space")
    g0 = gain_fn(root, states)
    tree = ViewTree([root], [-1], [0.0], [0.0], [g0], [g0], lam)
    pos = [np.array(root[:3])]
    lo, hi = omap.lo, omap.hi
    attempts = 0
    while len(tree) < n_nodes and attempts < ATTEMPTS_PER_NODE * n_nodes:
        attempts += 1
        p = lo + rng.random(3) * (hi - lo)
        target = Configuration(float(p[0]), float(p[1]), float(p[2]), wrap_angle(rng.uniform(-math.pi, math.pi)))
        P = np.asarray(pos)
        near = int(np.argmin(np.einsum("ij,ij->i", P - p, P - p)))
        new = _steer(tree.configs[near], target, max_edge)
        if not checker.segment_free(tree.configs[near][:3], new[:3]):
            continue
        c = connect_cost(vehicle, tree.configs[near], new)
        g = gain_fn(new, states)
        cost = tree.cost[near] + c
        tree.configs.append(new)
        tree.parent.append(near)
        tree.edge_cost.append(c)
        tree.cost.append(cost)
        tree.gain.append(g)
        tree.value.append(tree.value[near] + g * math.exp(-lam * cost))
        pos.append(np.array(new[:3]))
    if len(tree) < n_nodes:
        log.warning("view tree has %d of %d nodes", len(tree), n_nodes)
    return tree


@dataclass
class ExplorationLog:
    rows: list = field(default_factory=list)  # dicts, one per step
    path: list = field(default_factory=list)  # executed configurations, start first
    status: str = "max_steps"
    map: OccupancyMap = field(default=None, repr=False)

    @property
    def known_fractions(self):
        return [r["known_fraction"] for r in self.rows]


@dataclass(frozen=True)
class MapParams:
    lo: tuple
    hi: tuple
    resolution: float = 0.2


@dataclass(frozen=True)
class ExploreParams:
    g_min: float = G_MIN
    max_steps: int = 200
    n_nodes: int = N_NODES
    max_edge: float = MAX_EDGE
    lam: float = LAMBDA
    rays_h: int = 32
    rays_v: int = 24


def sense(omap, sensor, config, world, params):
    scan = simulate_scan(sensor, config, world, params.rays_h, params.rays_v)
    return omap.integrate_scan(config.position, scan, sensor.d_max)


def step_rng(seed, step, stream=0):
    """Per-step generator; stream 0 drives the view tree."""
    return np.random.default_rng([seed, step, stream])


def explore(world, start, sensor, vehicle, map_params, params=None, seed=0):
    """Closed-loop exploration of ``world``; returns an ExplorationLog."""
    params = params or ExploreParams()
    omap = OccupancyMap(map_params.lo, map_params.hi, map_params.resolution)
    cur = Configuration(*map(float, start))
    out = ExplorationLog(path=[cur], map=omap)
    for step in range(params.max_steps):
        sense(omap, sensor, cur, world, params)
        checker = MapCollision(omap, vehicle.clearance)
        tree = build_view_tree(omap, vehicle, sensor, cur, params.n_nodes, params.max_edge,
                               step_rng(seed, step), params.lam, checker=checker)
        best = tree.best()
        row = {"step": step, "x": cur.x, "y": cur.y, "z": cur.z, "yaw": cur.yaw,
               "gain": tree.value[best], "known_fraction": omap.known_fraction()}
        out.rows.append(row)
        if tree.value[best] < params.g_min:
            out.status = "converged"
            break
        nxt = tree.first_step(best)
        if nxt < 0:
            out.status = "stuck"
            log.warning("step %d: no Free expansion from the current view", step)
            break
        cur = tree.configs[nxt]
        out.path.append(cur)
    return out
