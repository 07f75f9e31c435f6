"""Tour optimization over viewpoint cost matrices.

``solve_tour`` is the working heuristic (nearest neighbour, then 2-opt and
Or-opt to a local optimum, best over seeded restarts). ``brute_force_tour`` is
the exact enumeration it is checked against on small instances.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleTour, TourTooLarge
from .kernels import tour as tk

BRUTE_FORCE_MAX = 10


@dataclass(frozen=True)
class Tour:
    order: list
    cost: float
    closed: bool = True

    def legs(self):
        seq = list(self.order)
        if self.closed and len(seq) > 1:
            seq.append(seq[0])
        return list(zip(seq[:-1], seq[1:]))


def _check_matrix(m):
    M = np.array(m, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError("cost matrix must be square and non-empty")
    if np.isnan(M).any() or (M < 0).any():
        raise ValueError("costs must be non-negative")
    np.fill_diagonal(M, 0.0)
    return M


def order_cost(m, order, closed=True):
    """Cost of visiting ``order``; closed tours return to the first node."""
    M = np.asarray(m, dtype=np.float64)
    order = list(order)
    c = 0.0
    for a, b in zip(order[:-1], order[1:]):
        c += M[a, b]
    if closed and len(order) > 1:
        c += M[order[-1], order[0]]
    return float(c)


def _with_depot(M, start):
    """Open tour -> closed tour on n+1 nodes through a zero-cost virtual depot."""
    n = len(M)
    D = np.zeros((n + 1, n + 1))
    D[:n, :n] = M
    if start is not None:
        D[n, :n] = math.inf
        D[n, start] = 0.0
    return D


def _open_from_cycle(cycle, depot):
    k = cycle.index(depot)
    return cycle[k + 1:] + cycle[:k]


def solve_tour(m, closed=True, restarts=5, seed=0, start=None):
    """Heuristic tour over cost matrix ``m`` (infinite entries mark forbidden legs).

    Closed tours start at ``start`` (default node 0). Open tours are solved as a
    cycle through a virtual depot; ``start`` then fixes the first node.
    Restart 0 builds from the anchor node, later restarts from distinct
    seeded random nodes. The best cost wins, ties going to the lowest restart index.
    """
    M = _check_matrix(m)
    n = len(M)
    if n == 1:
        return Tour([0], 0.0, closed)
    if start is not None and not 0 <= start < n:
        raise ValueError(f"start node {start} out of range")
    if closed:
        W, anchor = M, (0 if start is None else start)
    else:
        W, anchor = _with_depot(M, start), n
    N = len(W)
    finite = W[np.isfinite(W)]
    scale = float(finite.max()) if finite.size else 1.0
    big = 2.0 * N * max(scale, 1e-12) + 1.0
    P = np.where(np.isfinite(W), W, big)
    eps = 1e-10 * max(scale, 1e-12)

    rng = np.random.default_rng(seed)
    others = [v for v in rng.permutation(N).tolist() if v != anchor]
    best = None
    for r in range(max(1, restarts)):
        # distinct construction starts while they last, then repeats
        first = anchor if r == 0 else others[(r - 1) % len(others)]
        t = tk.nearest_neighbor(P, first)
        t = _rotate(t, anchor)
        tk.local_search(P, t, eps)
        # the reversed cycle is a different tour when costs are asymmetric
        rt = _rotate(np.concatenate((t[:1], t[1:][::-1])), anchor)
        if tk.tour_cost(P, rt) < tk.tour_cost(P, t) - eps:
            t = rt
            tk.local_search(P, t, eps)
        c = tk.tour_cost(P, t)
        if best is None or c < best[0] - eps:
            best = (c, t.copy())
    cycle = [int(v) for v in best[1]]
    if closed:
        order = cycle
    else:
        order = _open_from_cycle(cycle, n)
    cost = order_cost(M, order, closed)
    if not math.isfinite(cost):
        raise InfeasibleTour("no tour with finite cost was found")
    return Tour(order, cost, closed)


def _rotate(t, node):
    k = int(np.flatnonzero(t == node)[0])
    return np.ascontiguousarray(np.roll(t, -k))


def nearest_neighbor_cost(m, closed=True, start=None):
    """Cost of the plain nearest-neighbour construction used for restart 0."""
    M = _check_matrix(m)
    n = len(M)
    if n == 1:
        return 0.0
    if closed:
        anchor = 0 if start is None else start
        t = tk.nearest_neighbor(np.where(np.isfinite(M), M, np.inf), anchor)
        return order_cost(M, t.tolist(), True)
    D = _with_depot(M, start)
    t = tk.nearest_neighbor(D, n).tolist()
    return order_cost(M, _open_from_cycle(t, n), False)


def brute_force_tour(m, closed=True, start=None, chunk=40320):
    """Exact optimum by enumeration (n <= 10); ties go to the lexicographically smallest order.

    Closed tours are enumerated with node 0 (or ``start``) first.
    """
    M = _check_matrix(m)
    n = len(M)
    if n > BRUTE_FORCE_MAX:
        raise TourTooLarge(f"brute force is limited to {BRUTE_FORCE_MAX} nodes, got {n}")
    if n == 1:
        return Tour([0], 0.0, closed)
    if closed or start is not None:
        head = [0 if start is None else start]
        rest = [v for v in range(n) if v != head[0]]
    else:
        head = []
        rest = list(range(n))
    best_cost = min((float(c.min()) for c in _block_costs(M, head, rest, closed, chunk)), default=math.inf)
    if not math.isfinite(best_cost):
        raise InfeasibleTour("every tour has infinite cost")
    # summation order differs between equivalent tours, so "equal" means within noise
    tol = 1e-9 * max(1.0, abs(best_cost))
    for P, c in _blocks(M, head, rest, closed, chunk):
        hit = np.flatnonzero(c <= best_cost + tol)
        if len(hit):
            order = P[hit[0]].tolist()
            return Tour(order, order_cost(M, order, closed), closed)
    raise AssertionError("optimum vanished on re-scan")


def _blocks(M, head, rest, closed, chunk):
    perms = itertools.permutations(rest)
    while True:
        block = list(itertools.islice(perms, chunk))
        if not block:
            return
        P = np.asarray(block, dtype=np.int64)
        if head:
            P = np.hstack([np.full((len(P), 1), head[0]), P])
        c = M[P[:, :-1], P[:, 1:]].sum(axis=1)
        if closed:
            c = c + M[P[:, -1], P[:, 0]]
        yield P, c


def _block_costs(M, head, rest, closed, chunk):
    for _, c in _blocks(M, head, rest, closed, chunk):
        yield c
