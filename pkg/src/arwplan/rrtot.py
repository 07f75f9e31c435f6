"""Coverage tours from a forest of RRT* trees.

New trees root at copies of existing vertices, so the forest as a whole is a
connected graph: tree edges plus root links (a root and the vertex it was
copied from are the same configuration). Every vertex stores the set of faces
visible from it.

Tour extraction is this package's own concretization: a randomized greedy set
cover picks vertices that jointly see every face, shortest forest walks (or
collision-free direct connections, when cheaper) join them, and a TSP over
those distances orders them.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .collision import MeshCollision
from .errors import InfeasibleTour, NoCoverageWithinBudget, StartInCollision
from .geometry import Configuration
from .inspection import InspectionPath, covered_faces
from .path_search import SearchTree, sampling_bounds, try_direct
from .sensor import visible_faces
from .tour import solve_tour

P_NEW = 0.1
EXTRACT_TRIALS = 12


class Forest:
    def __init__(self, mesh, sensor, vehicle, start, world=None, bounds=None, step=1.0):
        self.mesh = mesh
        self.sensor = sensor
        self.vehicle = vehicle
        self.world = mesh if world is None else world
        self.checker = MeshCollision(self.world, vehicle.clearance)
        if not self.checker.point_free(start[:3]):
            raise StartInCollision(f"start {tuple(start)} is in collision")
        if bounds is None:
            bounds = sampling_bounds(self.world, start, margin=1.0 + sensor.d_min)
        self.bounds = bounds
        self.step = step
        self.trees = []
        self.root_link = []  # per tree: global id of the vertex the root copies, -1 for the first
        self._gid = []  # per tree: global ids of its vertices
        self._where = []  # global id -> (tree, local index)
        self._cover = np.zeros((64, mesh.n_faces), dtype=bool)
        self.best = None
        self._direct = {}
        self._new_tree(Configuration(*map(float, start)), -1)

    # -- bookkeeping --------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self._where)

    def config(self, g):
        t, i = self._where[g]
        return self.trees[t].configs[i]

    def cover(self, g):
        return self._cover[g]

    @property
    def covers(self):
        return self._cover[: self.n_vertices]

    def _register(self, t, i):
        g = len(self._where)
        if g == len(self._cover):
            grown = np.zeros((2 * g, self._cover.shape[1]), dtype=bool)
            grown[:g] = self._cover[:g]
            self._cover = grown
        self._where.append((t, i))
        self._gid[t].append(g)
        self._cover[g] = visible_faces(self.sensor, self.trees[t].configs[i], self.mesh, occluder=self.world)
        return g

    def _new_tree(self, root, link):
        tree = SearchTree(self.vehicle, self.checker, root, self.bounds, step=self.step)
        self.trees.append(tree)
        self.root_link.append(link)
        self._gid.append([])
        return self._register(len(self.trees) - 1, 0)

    # -- growth -------------------------------------------------------------
    def spawn(self, rng):
        g = int(rng.integers(self.n_vertices))
        return self._new_tree(self.config(g), g)

    def extend(self, rng):
        t = int(rng.integers(len(self.trees)))
        tree = self.trees[t]
        target = tree.sample(rng)
        before = len(tree)
        idx = tree.extend(target, yaw_goal=target.yaw)
        if idx < 0:
            return -1
        assert idx == before
        return self._register(t, idx)

    # -- graph --------------------------------------------------------------
    def _canonical(self, g):
        # a root is the same configuration as the vertex it was copied from
        t, i = self._where[g]
        while i == 0 and self.root_link[t] >= 0:
            g = self.root_link[t]
            t, i = self._where[g]
        return g

    def graph(self):
        """Sparse matrix of tree edges over canonical vertex ids."""
        n = self.n_vertices
        canon = np.array([self._canonical(g) for g in range(n)])
        edges = {}
        for t, tree in enumerate(self.trees):
            gids = self._gid[t]
            for i in range(1, len(tree)):
                p = tree.parent[i]
                a, b = canon[gids[p]], canon[gids[i]]
                if a == b:
                    continue
                c = max(tree.edge_cost[i], 1e-12)
                if c < edges.get((a, b), math.inf):
                    edges[(a, b)] = c
                if self.vehicle.holonomic and c < edges.get((b, a), math.inf):
                    edges[(b, a)] = c
        if edges:
            ij = np.array(list(edges.keys()))
            w = np.array(list(edges.values()))
            G = csr_matrix((w, (ij[:, 0], ij[:, 1])), shape=(n, n))
        else:
            G = csr_matrix((n, n))
        return G, canon

    def _direct_leg(self, a, b):
        key = (a, b)
        if key not in self._direct:
            lp = try_direct(self.vehicle, self.world, self.config(a), self.config(b), self.checker)
            self._direct[key] = math.inf if lp is None else lp.cost
        return self._direct[key]


def grow(forest, iterations, rng, p_new=P_NEW):
    """Run ``iterations`` growth steps; returns the number of vertices added."""
    added = 0
    for _ in range(iterations):
        if rng.random() < p_new:
            forest.spawn(rng)
            added += 1
        elif forest.extend(rng) >= 0:
            added += 1
    return added


def _greedy_cover(covers, start, dist_to, rng, weight, randomize):
    """Vertex set covering every face, always containing ``start``."""
    F = covers.shape[1]
    uncovered = ~covers[start]
    chosen = [start]
    while uncovered.any():
        gain = covers[:, uncovered].sum(axis=1).astype(np.float64)
        if gain.max() <= 0:
            return None
        near = np.min(np.stack([dist_to(c) for c in chosen]), axis=0)
        score = gain / (1.0 + weight * near)
        score[gain <= 0] = -1.0
        if randomize:
            top = np.flatnonzero(score >= 0.7 * score.max())
            v = int(rng.choice(top))
        else:
            v = int(np.argmax(score))
        chosen.append(v)
        uncovered &= ~covers[v]
    # drop members whose faces the others already see
    for v in sorted(chosen[1:], key=lambda v: covers[v].sum()):
        rest = [u for u in chosen if u != v]
        if np.logical_or.reduce(covers[rest], axis=0).sum() == F:
            chosen = rest
    return chosen


def extract_best_tour(forest, rng=None, trials=EXTRACT_TRIALS):
    """Cheapest covering tour assembled from the forest, or None if none exists yet."""
    rng = rng if rng is not None else np.random.default_rng(0)
    n = forest.n_vertices
    covers = forest.covers
    if not covers.any(axis=0).all():
        return None
    G, canon = forest.graph()
    P = np.array([forest.config(g)[:3] for g in range(n)])
    v = forest.vehicle.v_max

    def dist_to(g):
        return np.linalg.norm(P - P[g], axis=1) / v

    best = None
    tried = set()
    for k in range(trials):
        weight = (0.0, 0.5, 2.0)[k % 3]
        S = _greedy_cover(covers, 0, dist_to, rng, weight, randomize=k >= 3)
        if S is None:
            return None
        key = tuple(sorted(S))
        if key in tried:
            continue
        tried.add(key)
        nodes = canon[S]
        D, pred = dijkstra(G, directed=True, indices=nodes, return_predecessors=True)
        m = len(S)
        M = np.empty((m, m))
        via = {}
        for a in range(m):
            for b in range(m):
                if a == b:
                    M[a, b] = 0.0
                    continue
                walk = D[a, nodes[b]]
                direct = forest._direct_leg(S[a], S[b])
                M[a, b] = min(walk, direct)
                via[(a, b)] = "direct" if direct <= walk else "walk"
        try:
            tour = solve_tour(M, closed=True, restarts=5, seed=k, start=0)
        except InfeasibleTour:
            continue
        if best is None or tour.cost < best[0]:
            best = (tour.cost, S, tour, via, nodes, pred)
    if best is None:
        return None
    cost, S, tour, via, nodes, pred = best
    return _assemble(forest, S, tour, via, nodes, pred)


def _walk(forest, pred_row, src, dst):
    chain = [dst]
    while chain[-1] != src:
        chain.append(int(pred_row[chain[-1]]))
    return [forest.config(g) for g in chain[::-1]]


def _assemble(forest, S, tour, via, nodes, pred):
    from .path_search import chain_cost

    legs, costs = [], []
    for a, b in tour.legs():
        if via[(a, b)] == "direct":
            cfgs = [forest.config(S[a]), forest.config(S[b])]
        else:
            cfgs = _walk(forest, pred[a], nodes[a], nodes[b])
        legs.append(cfgs)
        costs.append(chain_cost(forest.vehicle, cfgs))
    vps = [forest.config(S[i]) for i in tour.order]
    path = InspectionPath(vps, legs, costs, float(sum(costs)), frozenset(), forest.mesh.n_faces,
                          (), True, {"vertices": [int(S[i]) for i in tour.order]})
    path.covered = covered_faces(forest.sensor, forest.mesh, path.configurations, forest.world)
    return path


@dataclass
class RrtotResult:
    path: InspectionPath
    history: list  # (iteration, best cost so far); inf before the first covering tour
    forest: Forest = field(repr=False)


def plan_optimal_inspection(mesh, sensor, vehicle, start, iterations=20000, checkpoint=1000, seed=0,
                            obstacles=None, bounds=None, p_new=P_NEW, trials=EXTRACT_TRIALS):
    """Grow the forest, extracting the best covering tour at every checkpoint."""
    rng = np.random.default_rng(seed)
    world = mesh.merged(obstacles)
    forest = Forest(mesh, sensor, vehicle, start, world, bounds)
    history = []
    best = None
    done = 0
    while done < iterations:
        k = min(checkpoint, iterations - done)
        grow(forest, k, rng, p_new)
        done += k
        path = extract_best_tour(forest, rng, trials)
        if path is not None and (best is None or path.cost < best.cost):
            best = path
        history.append((done, best.cost if best is not None else math.inf))
    if best is None:
        seen = forest.covers.any(axis=0)
        raise NoCoverageWithinBudget(np.flatnonzero(~seen).tolist())
    forest.best = best
    return RrtotResult(best, history, forest)
