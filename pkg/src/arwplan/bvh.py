"""Median-split bounding volume hierarchy over triangle faces."""

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4


@dataclass(frozen=True)
class BVH:
    bmin: np.ndarray
    bmax: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray
    tv0: np.ndarray
    tv1: np.ndarray
    tv2: np.ndarray

    @property
    def n_nodes(self):
        return len(self.left)

    def node_arrays(self):
        return (self.bmin, self.bmax, self.left, self.right, self.start, self.count)

    def depth(self):
        best = 0
        stack = [(0, 1)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.left[node] >= 0:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best


def build_bvh(v0, v1, v2, leaf_size=LEAF_SIZE):
    """Build a BVH splitting each node at the median centroid of its widest axis."""
    n = len(v0)
    lo = np.minimum(np.minimum(v0, v1), v2)
    hi = np.maximum(np.maximum(v0, v1), v2)
    cent = (v0 + v1 + v2) / 3.0
    order = np.arange(n)

    bmin, bmax, left, right, start, count = [], [], [], [], [], []

    def new_node(s, e):
        idx = order[s:e]
        bmin.append(lo[idx].min(axis=0))
        bmax.append(hi[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(s)
        count.append(e - s)
        return len(left) - 1

    root = new_node(0, n)
    work = [(root, 0, n)]
    while work:
        node, s, e = work.pop()
        if e - s <= leaf_size:
            continue
        idx = order[s:e]
        c = cent[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        # stable sort keeps the build deterministic for coincident centroids
        order[s:e] = idx[np.argsort(c[:, axis], kind="stable")]
        mid = (s + e) // 2
        a = new_node(s, mid)
        b = new_node(mid, e)
        left[node] = a
        right[node] = b
        start[node] = 0
        count[node] = 0
        work.append((b, mid, e))
        work.append((a, s, mid))

    return BVH(
        bmin=np.asarray(bmin, dtype=np.float64),
        bmax=np.asarray(bmax, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64),
        count=np.asarray(count, dtype=np.int64),
        order=order.astype(np.int64),
        tv0=np.ascontiguousarray(v0[order]),
        tv1=np.ascontiguousarray(v1[order]),
        tv2=np.ascontiguousarray(v2[order]),
    )
