"""Voxel traversal kernels for the dense occupancy grid.

Grid coordinates: voxel (i, j, k) spans ``lo + res * [i, i+1)`` per axis.
Mark codes in the per-scan scratch array: 0 untouched, 1 free, 2 occupied.
"""

import numpy as np

from .._accel import njit

FREE_MARK = 1
OCC_MARK = 2


@njit
def _floor_index(x, lo, res, n):
    i = int(np.floor((x - lo) / res))
    if i < 0:
        return -1
    if i >= n:
        return n
    return i


@njit
def _clip_entry(o, d, lo, hi, tmax):
    """[t0, t1] of the ray inside the box, t0 = t1 = -1 if it never enters."""
    t0 = 0.0
    t1 = tmax
    for k in range(3):
        if abs(d[k]) < 1e-300:
            if o[k] < lo[k] or o[k] >= hi[k]:
                return -1.0, -1.0
        else:
            ta = (lo[k] - o[k]) / d[k]
            tb = (hi[k] - o[k]) / d[k]
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
    if t0 > t1:
        return -1.0, -1.0
    return t0, t1


@njit
def walk(o, d, t_end, lo, res, shape, out):
    """Amanatides-Woo walk from ``o`` along unit ``d`` up to parameter ``t_end``.

    Writes visited voxel indices (in order) into ``out`` (rows i, j, k) and
    returns how many were written. The voxel containing the end point is last.
    """
    hi = np.empty(3)
    for k in range(3):
        hi[k] = lo[k] + res * shape[k]
    t0, t1 = _clip_entry(o, d, lo, hi, t_end)
    if t0 < 0.0:
        return 0
    idx = np.empty(3, dtype=np.int64)
    step = np.empty(3, dtype=np.int64)
    tnext = np.empty(3)
    tdelta = np.empty(3)
    for k in range(3):
        p = o[k] + t0 * d[k]
        i = int(np.floor((p - lo[k]) / res))
        if i < 0:
            i = 0
        if i >= shape[k]:
            i = shape[k] - 1
        idx[k] = i
        if d[k] > 0.0:
            step[k] = 1
            tnext[k] = (lo[k] + (i + 1) * res - o[k]) / d[k]
            tdelta[k] = res / d[k]
        elif d[k] < 0.0:
            step[k] = -1
            tnext[k] = (lo[k] + i * res - o[k]) / d[k]
            tdelta[k] = -res / d[k]
        else:
            step[k] = 0
            tnext[k] = np.inf
            tdelta[k] = np.inf
    n = 0
    cap = out.shape[0]
    while n < cap:
        out[n, 0] = idx[0]
        out[n, 1] = idx[1]
        out[n, 2] = idx[2]
        n += 1
        # next boundary crossing
        k = 0
        if tnext[1] < tnext[k]:
            k = 1
        if tnext[2] < tnext[k]:
            k = 2
        if tnext[k] > t1:
            break
        idx[k] += step[k]
        if idx[k] < 0 or idx[k] >= shape[k]:
            break
        tnext[k] += tdelta[k]
    return n


@njit
def integrate_rays(logodds, count, lo, res, origin, dirs, ranges, hit, max_range,
                   l_hit, l_miss, l_min, l_max, marks):
    """Apply one scan: free updates along each ray, occupied update at each hit voxel.

    Each voxel is updated at most once per scan (occupied wins over free).
    Returns the number of voxels observed for the first time.
    """
    shape = np.array(logodds.shape, dtype=np.int64)
    cap = int(shape.sum()) * 2 + 8
    buf = np.empty((cap, 3), dtype=np.int64)
    lst = []
    for r in range(dirs.shape[0]):
        d = dirs[r]
        t_end = ranges[r] if hit[r] else max_range
        n = walk(origin, d, t_end, lo, res, shape, buf)
        if n == 0:
            continue
        end = np.empty(3, dtype=np.int64)
        for k in range(3):
            end[k] = _floor_index(origin[k] + t_end * d[k], lo[k], res, shape[k])
        end_inside = True
        for k in range(3):
            if end[k] < 0 or end[k] >= shape[k]:
                end_inside = False
        for m in range(n):
            i, j, k = buf[m, 0], buf[m, 1], buf[m, 2]
            if hit[r] and end_inside and i == end[0] and j == end[1] and k == end[2]:
                break
            if marks[i, j, k] == 0:
                marks[i, j, k] = FREE_MARK
                lst.append((i, j, k))
        if hit[r] and end_inside:
            i, j, k = end[0], end[1], end[2]
            if marks[i, j, k] == 0:
                lst.append((i, j, k))
            marks[i, j, k] = OCC_MARK
    newly = 0
    for (i, j, k) in lst:
        if count[i, j, k] == 0:
            newly += 1
        count[i, j, k] += 1
        if marks[i, j, k] == OCC_MARK:
            v = logodds[i, j, k] + l_hit
        else:
            v = logodds[i, j, k] - l_miss
        if v < l_min:
            v = l_min
        if v > l_max:
            v = l_max
        logodds[i, j, k] = v
        marks[i, j, k] = 0
    return newly


@njit
def _blocked(occ, o, target, lo, res, buf, ti, tj, tk):
    """Does an occupied voxel lie on the segment o -> target before the target voxel?"""
    shape = np.array(occ.shape, dtype=np.int64)
    d = target - o
    dist = np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if dist <= 0.0:
        return False
    u = d / dist
    n = walk(o, u, dist, lo, res, shape, buf)
    for m in range(n):
        i, j, k = buf[m, 0], buf[m, 1], buf[m, 2]
        if i == ti and j == tj and k == tk:
            return False
        if occ[i, j, k]:
            return True
    return False


@njit
def view_gains(state, count, lo, res, origin, cand, c_sat):
    """Unknown-voxel count and reobservation sum over candidate voxels ``cand`` (M x 3 ints).

    ``state``: 0 unknown, 1 free, 2 occupied. Only occupied voxels block sight.
    """
    shape = np.array(state.shape, dtype=np.int64)
    occ = state == 2
    buf = np.empty((int(shape.sum()) * 2 + 8, 3), dtype=np.int64)
    target = np.empty(3)
    unknown = 0
    reobs = 0.0
    for m in range(cand.shape[0]):
        i, j, k = cand[m, 0], cand[m, 1], cand[m, 2]
        target[0] = lo[0] + (i + 0.5) * res
        target[1] = lo[1] + (j + 0.5) * res
        target[2] = lo[2] + (k + 0.5) * res
        if _blocked(occ, origin, target, lo, res, buf, i, j, k):
            continue
        s = state[i, j, k]
        if s == 0:
            unknown += 1
        else:
            c = count[i, j, k]
            if c < c_sat:
                reobs += 1.0 - c / c_sat
    return unknown, reobs


@njit
def line_of_sight(state, lo, res, origin, targets):
    shape = np.array(state.shape, dtype=np.int64)
    occ = state == 2
    buf = np.empty((int(shape.sum()) * 2 + 8, 3), dtype=np.int64)
    out = np.ones(targets.shape[0], dtype=np.bool_)
    for m in range(targets.shape[0]):
        t = targets[m]
        ti = int(np.floor((t[0] - lo[0]) / res))
        tj = int(np.floor((t[1] - lo[1]) / res))
        tk = int(np.floor((t[2] - lo[2]) / res))
        out[m] = not _blocked(occ, origin, t, lo, res, buf, ti, tj, tk)
    return out


@njit
def _point_box_dist2(px, py, pz, x0, y0, z0, res):
    dx = max(x0 - px, 0.0, px - (x0 + res))
    dy = max(y0 - py, 0.0, py - (y0 + res))
    dz = max(z0 - pz, 0.0, pz - (z0 + res))
    return dx * dx + dy * dy + dz * dz


@njit
def segment_box_dist2(a, d, x0, y0, z0, res):
    """Squared distance from segment a + t d (t in [0, 1]) to an axis-aligned cube.

    The distance is convex in t, so a golden-section search converges to it.
    """
    g = 0.6180339887498949
    lo_t = 0.0
    hi_t = 1.0
    for _ in range(60):
        if hi_t - lo_t < 1e-12:
            break
        t1 = hi_t - g * (hi_t - lo_t)
        t2 = lo_t + g * (hi_t - lo_t)
        f1 = _point_box_dist2(a[0] + t1 * d[0], a[1] + t1 * d[1], a[2] + t1 * d[2], x0, y0, z0, res)
        f2 = _point_box_dist2(a[0] + t2 * d[0], a[1] + t2 * d[1], a[2] + t2 * d[2], x0, y0, z0, res)
        if f1 <= f2:
            hi_t = t2
        else:
            lo_t = t1
    t = 0.5 * (lo_t + hi_t)
    best = _point_box_dist2(a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2], x0, y0, z0, res)
    for tt in (0.0, 1.0):
        v = _point_box_dist2(a[0] + tt * d[0], a[1] + tt * d[1], a[2] + tt * d[2], x0, y0, z0, res)
        if v < best:
            best = v
    return best


@njit
def segment_in_free(state, lo, res, a, b, radius):
    """True iff every voxel closer than ``radius`` to segment ab (or touching it) is Free.

    The capsule must also stay ``radius`` inside the map bounds.
    """
    shape = state.shape
    d = b - a
    for k in range(3):
        hi = lo[k] + res * shape[k]
        if min(a[k], b[k]) - lo[k] < radius or hi - max(a[k], b[k]) < radius:
            return False
        if min(a[k], b[k]) < lo[k] or max(a[k], b[k]) >= hi:
            return False
    r2 = radius * radius
    i0 = max(int(np.floor((min(a[0], b[0]) - radius - lo[0]) / res)), 0)
    i1 = min(int(np.floor((max(a[0], b[0]) + radius - lo[0]) / res)), shape[0] - 1)
    j0 = max(int(np.floor((min(a[1], b[1]) - radius - lo[1]) / res)), 0)
    j1 = min(int(np.floor((max(a[1], b[1]) + radius - lo[1]) / res)), shape[1] - 1)
    k0 = max(int(np.floor((min(a[2], b[2]) - radius - lo[2]) / res)), 0)
    k1 = min(int(np.floor((max(a[2], b[2]) + radius - lo[2]) / res)), shape[2] - 1)
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            for k in range(k0, k1 + 1):
                if state[i, j, k] == 1:
                    continue
                dist2 = segment_box_dist2(a, d, lo[0] + i * res, lo[1] + j * res, lo[2] + k * res, res)
                if dist2 < r2 or dist2 <= 0.0:
                    return False
    return True
