"""RRT* point-to-point planning and the tree it grows."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .collision import MeshCollision
from .errors import NoPathWithinBudget, StartInCollision
from .geometry import Configuration, wrap_angle
from .vehicle import connect, connect_cost

GOAL_BIAS = 0.05
STEP = 1.0
_UNIT_BALL_3D = 4.0 / 3.0 * math.pi


@dataclass
class Budget:
    max_iterations: int = 1500
    max_seconds: float = math.inf


def sampling_bounds(world, *configs, margin=1.0):
    pts = [np.asarray(c[:3], dtype=np.float64) for c in configs]
    if world is not None:
        lo, hi = world.bounds
        pts += [lo, hi]
    pts = np.asarray(pts)
    return pts.min(axis=0) - margin, pts.max(axis=0) + margin


class SearchTree:
    """RRT* tree: configurations with parent links and cost-to-come.

    Edge validity goes through ``checker``; costs through the vehicle's
    ``connect_cost`` (asymmetric for nonholonomic vehicles, so parent choice
    uses near -> new and rewiring uses new -> near).
    """

    def __init__(self, vehicle, checker, root, bounds, step=STEP, capacity=256):
        self.vehicle = vehicle
        self.checker = checker
        self.bounds = (np.asarray(bounds[0], dtype=np.float64), np.asarray(bounds[1], dtype=np.float64))
        self.step = step
        self.configs = []
        self.parent = []
        self.cost = []
        self.edge_cost = []
        self.children = []
        self._pos = np.empty((capacity, 3))
        volume = float(np.prod(self.bounds[1] - self.bounds[0]))
        self.gamma = 2.0 * (1.0 + 1.0 / 3.0) ** (1.0 / 3.0) * (volume / _UNIT_BALL_3D) ** (1.0 / 3.0)
        self._append(root, -1, 0.0, 0.0)

    def __len__(self):
        return len(self.configs)

    @property
    def positions(self):
        return self._pos[: len(self.configs)]

    def _append(self, config, parent, cost, edge):
        n = len(self.configs)
        if n == len(self._pos):
            grown = np.empty((2 * len(self._pos), 3))
            grown[:n] = self._pos[:n]
            self._pos = grown
        self._pos[n] = config[:3]
        self.configs.append(config)
        self.parent.append(parent)
        self.cost.append(cost)
        self.edge_cost.append(edge)
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(n)
        return n

    def near_radius(self):
        n = len(self.configs)
        if n < 2:
            return self.step
        return min(self.gamma * (math.log(n) / n) ** (1.0 / 3.0), self.step)

    def nearest(self, p):
        d = self.positions - p
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    def near(self, p, radius):
        d = self.positions - p
        return np.flatnonzero(np.einsum("ij,ij->i", d, d) <= radius * radius)

    def edge_free(self, a, b):
        if self.vehicle.holonomic:
            return self.checker.segment_free(a[:3], b[:3])
        lp = connect(self.vehicle, a, b)
        return lp is not None and self.checker.polyline_free(lp.points)

    def sample(self, rng):
        lo, hi = self.bounds
        p = lo + rng.random(3) * (hi - lo)
        yaw = rng.uniform(-math.pi, math.pi)
        return Configuration(float(p[0]), float(p[1]), float(p[2]), wrap_angle(yaw))

    def steer(self, src, target, yaw_goal=None):
        """Config at most ``step`` from ``src`` toward ``target``.

        Holonomic yaw turns toward ``yaw_goal`` (default: the target's yaw) only
        as far as the translation time allows, so turning never adds cost.
        Nonholonomic vehicles move along the Dubins curve instead.
        """
        v = self.vehicle
        if v.holonomic:
            pa = np.array(src[:3])
            d = np.array(target[:3]) - pa
            dist = float(np.linalg.norm(d))
            frac = 1.0 if dist <= self.step else self.step / dist
            p = pa + frac * d
            want = wrap_angle((target.yaw if yaw_goal is None else yaw_goal) - src.yaw)
            allow = v.yaw_rate_max * (frac * dist) / v.v_max
            dyaw = max(-allow, min(allow, want))
            return Configuration(float(p[0]), float(p[1]), float(p[2]), wrap_angle(src.yaw + dyaw))
        lp = connect(v, src, target)
        if lp is None:
            return None
        if lp.length <= self.step:
            return target
        # walk the waypoints to one step of arc length
        seg = np.linalg.norm(np.diff(lp.points, axis=0), axis=1)
        k = int(np.searchsorted(np.cumsum(seg), self.step))
        return Configuration(*map(float, lp.waypoints[max(1, min(k, len(seg)))]))

    def choose_parent(self, new, near_idx):
        """Cheapest collision-free parent among ``near_idx``; returns (parent, cost, edge)."""
        best = (-1, math.inf, math.inf)
        cands = []
        for j in near_idx:
            c = connect_cost(self.vehicle, self.configs[j], new)
            cands.append((self.cost[j] + c, j, c))
        cands.sort()
        for total, j, c in cands:
            if not math.isfinite(total):
                break
            if self.edge_free(self.configs[j], new):
                return j, total, c
        return best

    def add(self, config, parent, cost, edge):
        return self._append(config, parent, cost, edge)

    def rewire(self, idx, near_idx):
        """Re-parent near vertices through ``idx`` where that is cheaper."""
        new = self.configs[idx]
        base = self.cost[idx]
        changed = False
        for j in near_idx:
            if j == idx or j == self.parent[idx] or self.parent[j] < 0:
                continue
            c = connect_cost(self.vehicle, new, self.configs[j])
            if base + c < self.cost[j] - 1e-12 and self.edge_free(new, self.configs[j]):
                self.children[self.parent[j]].remove(j)
                self.parent[j] = idx
                self.children[idx].append(j)
                self.edge_cost[j] = c
                self._propagate(j, base + c)
                changed = True
        return changed

    def _propagate(self, j, cost):
        stack = [(j, cost)]
        while stack:
            k, ck = stack.pop()
            self.cost[k] = ck
            for ch in self.children[k]:
                stack.append((ch, ck + self.edge_cost[ch]))

    def extend(self, target, yaw_goal=None):
        """One RRT* extension toward ``target``; returns the new vertex index or -1."""
        src = self.nearest(np.array(target[:3]))
        new = self.steer(self.configs[src], target, yaw_goal)
        if new is None or not self.checker.point_free(new[:3]):
            return -1
        near = self.near(np.array(new[:3]), self.near_radius())
        if src not in near:
            near = np.append(near, src)
        parent, cost, edge = self.choose_parent(new, near)
        if parent < 0:
            return -1
        idx = self.add(new, parent, cost, edge)
        self.rewire(idx, near)
        return idx

    def path_to(self, idx):
        out = []
        while idx >= 0:
            out.append(self.configs[idx])
            idx = self.parent[idx]
        return out[::-1]

    def is_acyclic(self):
        for i in range(len(self.configs)):
            seen = set()
            k = i
            while k >= 0:
                if k in seen:
                    return False
                seen.add(k)
                k = self.parent[k]
        return True


@dataclass
class SearchResult:
    path: list
    cost: float
    iterations: int
    tree: SearchTree = field(default=None, repr=False)


def shortcut(vehicle, checker, path):
    """Greedy shortcutting: from each vertex jump to the farthest reachable later vertex."""
    if len(path) <= 2:
        return list(path)
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1:
            if connect_cost(vehicle, path[i], path[j]) <= _chain_cost(vehicle, path, i, j) + 1e-12:
                lp_ok = (checker.segment_free(path[i][:3], path[j][:3]) if vehicle.holonomic
                         else _dubins_free(vehicle, checker, path[i], path[j]))
                if lp_ok:
                    break
            j -= 1
        out.append(path[j])
        i = j
    return out


def _chain_cost(vehicle, path, i, j):
    return sum(connect_cost(vehicle, path[k], path[k + 1]) for k in range(i, j))


def _dubins_free(vehicle, checker, a, b):
    lp = connect(vehicle, a, b)
    return lp is not None and checker.polyline_free(lp.points)


def chain_cost(vehicle, path):
    return _chain_cost(vehicle, path, 0, len(path) - 1)


def try_direct(vehicle, world, a, b, checker=None):
    """``connect(a, b)`` if the resulting local path is collision-free, else None."""
    checker = checker or MeshCollision(world, vehicle.clearance)
    lp = connect(vehicle, a, b)
    if lp is None:
        return None
    if not checker.path_free(lp, straight=vehicle.holonomic):
        return None
    return lp


def plan_point_to_point(vehicle, world, start, goal, budget=None, seed=0, *, checker=None,
                        bounds=None, allow_direct=True, smooth=True, goal_bias=GOAL_BIAS,
                        step=STEP, rng=None):
    """Collision-free path from ``start`` to ``goal`` (list of Configuration).

    Tries the direct connection first, then grows an RRT* tree with goal
    biasing. The returned path ends exactly at ``goal``. With ``smooth`` the
    best path so far is greedily shortcut whenever the tree improves it; the
    cheapest result seen is kept, so a larger iteration budget (same seed)
    never returns a costlier path.
    """
    budget = budget or Budget()
    checker = checker or MeshCollision(world, vehicle.clearance)
    if not checker.point_free(start[:3]):
        raise StartInCollision(f"start {tuple(start)} is in collision")
    if allow_direct:
        lp = try_direct(vehicle, world, start, goal, checker)
        if lp is not None:
            return SearchResult([start, goal], lp.cost, 0)

    if bounds is None:
        bounds = sampling_bounds(world, start, goal)
    rng = rng if rng is not None else np.random.default_rng(seed)
    tree = SearchTree(vehicle, checker, start, bounds, step=step,
                      capacity=min(budget.max_iterations + 2, 1 << 16))
    goal_idx = -1
    best_path, best_cost = None, math.inf
    seen_cost = math.inf
    t0 = time.perf_counter()
    it = 0
    goal_free = checker.point_free(goal[:3])
    for it in range(1, budget.max_iterations + 1):
        if time.perf_counter() - t0 > budget.max_seconds:
            break
        if goal_free and rng.random() < goal_bias:
            target = goal
        else:
            target = tree.sample(rng)
        idx = tree.extend(target, yaw_goal=goal.yaw)
        if idx < 0 or not goal_free:
            continue
        if goal_idx < 0:
            new = tree.configs[idx]
            if new == goal:
                goal_idx = idx
            elif new.distance(goal) <= tree.step:
                near = tree.near(goal[:3], tree.near_radius())
                near = np.union1d(near, [idx])
                parent, cost, edge = tree.choose_parent(goal, near)
                if parent >= 0:
                    goal_idx = tree.add(goal, parent, cost, edge)
                    tree.rewire(goal_idx, near)
        if goal_idx >= 0 and tree.cost[goal_idx] < seen_cost - 1e-12:
            seen_cost = tree.cost[goal_idx]
            path = tree.path_to(goal_idx)
            if smooth:
                path = shortcut(vehicle, checker, path)
            c = chain_cost(vehicle, path)
            if c < best_cost:
                best_path, best_cost = path, c
    if best_path is None:
        raise NoPathWithinBudget(
            f"no path from {tuple(round(v, 3) for v in start)} to {tuple(round(v, 3) for v in goal)} "
            f"within {it} iterations"
        )
    return SearchResult(best_path, best_cost, it, tree)

