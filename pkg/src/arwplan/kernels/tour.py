"""Tour construction and local search on a dense, possibly asymmetric cost matrix.

Tours are cycles stored as node arrays with position 0 pinned; infinite
entries must be replaced by a large finite penalty before calling in.
"""

import numpy as np

from .._accel import njit


@njit
def nearest_neighbor(M, first):
    n = M.shape[0]
    tour = np.empty(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    tour[0] = first
    used[first] = True
    for k in range(1, n):
        cur = tour[k - 1]
        best = -1
        best_c = np.inf
        for j in range(n):
            if not used[j] and M[cur, j] < best_c:
                best_c = M[cur, j]
                best = j
        tour[k] = best
        used[best] = True
    return tour


@njit
def tour_cost(M, tour):
    n = tour.shape[0]
    c = 0.0
    for k in range(n):
        c += M[tour[k], tour[(k + 1) % n]]
    return c


@njit
def _prefix(M, tour, fwd, rev):
    n = tour.shape[0]
    fwd[0] = 0.0
    rev[0] = 0.0
    for k in range(n - 1):
        fwd[k + 1] = fwd[k] + M[tour[k], tour[k + 1]]
        rev[k + 1] = rev[k] + M[tour[k + 1], tour[k]]


@njit
def two_opt(M, tour, eps):
    """Segment-reversal 2-opt to a local optimum, with directional costs."""
    n = tour.shape[0]
    fwd = np.empty(n)
    rev = np.empty(n)
    improved = True
    moved = False
    while improved:
        improved = False
        _prefix(M, tour, fwd, rev)
        for i in range(1, n - 1):
            a = tour[i - 1]
            for j in range(i + 1, n):
                b = tour[(j + 1) % n]
                ti = tour[i]
                tj = tour[j]
                delta = (M[a, tj] + M[ti, b] - M[a, ti] - M[tj, b]
                         + (rev[j] - rev[i]) - (fwd[j] - fwd[i]))
                if delta < -eps:
                    lo = i
                    hi = j
                    while lo < hi:
                        tmp = tour[lo]
                        tour[lo] = tour[hi]
                        tour[hi] = tmp
                        lo += 1
                        hi -= 1
                    improved = True
                    moved = True
                    _prefix(M, tour, fwd, rev)
    return moved


@njit
def or_opt(M, tour, eps, max_seg):
    """Move chains of 1-3 nodes (optionally reversed) to a better position."""
    n = tour.shape[0]
    moved = False
    improved = True
    while improved:
        improved = False
        for seg in range(1, max_seg + 1):
            if seg > n - 2:
                break
            s = 1
            while s + seg - 1 <= n - 1:
                e = s + seg - 1
                p = tour[s - 1]
                q = tour[(e + 1) % n]
                ts = tour[s]
                te = tour[e]
                inner = 0.0
                inner_rev = 0.0
                for k in range(s, e):
                    inner += M[tour[k], tour[k + 1]]
                    inner_rev += M[tour[k + 1], tour[k]]
                removed = M[p, ts] + inner + M[te, q] - M[p, q]
                best = -eps
                best_pos = -1
                best_flip = False
                # insertion edge (x, y) = (tour[k], tour[k+1]) outside [s-1, e]
                for k in range(n):
                    if k >= s - 1 and k <= e:
                        continue
                    x = tour[k]
                    y = tour[(k + 1) % n]
                    d = M[x, ts] + inner + M[te, y] - M[x, y] - removed
                    if d < best:
                        best = d
                        best_pos = k
                        best_flip = False
                    d = M[x, te] + inner_rev + M[ts, y] - M[x, y] - removed
                    if d < best:
                        best = d
                        best_pos = k
                        best_flip = True
                if best_pos >= 0:
                    chain = tour[s:e + 1].copy()
                    if best_flip:
                        chain = chain[::-1].copy()
                    rest = np.concatenate((tour[:s], tour[e + 1:]))
                    # position of x in the shortened tour
                    k = best_pos if best_pos < s else best_pos - seg
                    tour[:] = np.concatenate((rest[:k + 1], chain, rest[k + 1:]))
                    improved = True
                    moved = True
                else:
                    s += 1
    return moved


@njit
def local_search(M, tour, eps, max_seg=3):
    while True:
        a = two_opt(M, tour, eps)
        b = or_opt(M, tour, eps, max_seg)
        if not (a or b):
            break
    return tour
