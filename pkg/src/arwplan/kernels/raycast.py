"""Ray and capsule queries against a flattened BVH.

Node arrays (``bmin``, ``bmax``, ``left``, ``right``, ``start``, ``count``)
describe the hierarchy; ``left == -1`` marks a leaf covering
``order[start:start + count]``. Triangle vertex arrays ``tv0/tv1/tv2`` are in
leaf order and ``order`` maps them back to mesh face indices.
"""

import numpy as np

from .._accel import njit

RAY_EPS = 1e-6
DET_EPS = 1e-12
STACK = 128


@njit
def moller_trumbore(ox, oy, oz, dx, dy, dz, v0, v1, v2):
    """Ray parameter of the hit with triangle (v0, v1, v2), or -1.0 on a miss.

    Edges are inclusive, so a ray through a shared edge reports both faces.
    """
    e1x = v1[0] - v0[0]
    e1y = v1[1] - v0[1]
    e1z = v1[2] - v0[2]
    e2x = v2[0] - v0[0]
    e2y = v2[1] - v0[1]
    e2z = v2[2] - v0[2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < DET_EPS:
        return -1.0
    inv = 1.0 / det
    sx = ox - v0[0]
    sy = oy - v0[1]
    sz = oz - v0[2]
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    return (e2x * qx + e2y * qy + e2z * qz) * inv


@njit
def _slab(ox, oy, oz, dx, dy, dz, bmin, bmax, tmax):
    # entry parameter of the ray into the box, or -1.0 if it misses within tmax
    t0 = 0.0
    t1 = tmax
    o = (ox, oy, oz)
    d = (dx, dy, dz)
    for k in range(3):
        if abs(d[k]) < 1e-300:
            if o[k] < bmin[k] or o[k] > bmax[k]:
                return -1.0
        else:
            inv = 1.0 / d[k]
            ta = (bmin[k] - o[k]) * inv
            tb = (bmax[k] - o[k]) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                return -1.0
    return t0


@njit
def ray_cast_batch(bmin, bmax, left, right, start, count, order, tv0, tv1, tv2,
                   origins, dirs, tmax):
    n = origins.shape[0]
    out_t = np.full(n, np.inf)
    out_f = np.full(n, -1, dtype=np.int64)
    stack = np.empty(STACK, dtype=np.int64)
    for r in range(n):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        best_t = np.inf
        best_f = -1
        lim = tmax[r]
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            reach = lim if lim < best_t else best_t
            tn = _slab(ox, oy, oz, dx, dy, dz, bmin[node], bmax[node], reach)
            if tn < 0.0:
                continue
            if left[node] < 0:
                s = start[node]
                for i in range(s, s + count[node]):
                    t = moller_trumbore(ox, oy, oz, dx, dy, dz, tv0[i], tv1[i], tv2[i])
                    if t > RAY_EPS and t <= lim:
                        f = order[i]
                        if t < best_t or (t == best_t and f < best_f):
                            best_t = t
                            best_f = f
            else:
                stack[sp] = left[node]
                stack[sp + 1] = right[node]
                sp += 2
        out_t[r] = best_t
        out_f[r] = best_f
    return out_t, out_f


def ray_cast_all_faces(v0, v1, v2, origins, dirs, tmax):
    """Vectorized exhaustive ray cast; the fallback when numba is disabled."""
    e1 = v1 - v0
    e2 = v2 - v0
    n = origins.shape[0]
    out_t = np.full(n, np.inf)
    out_f = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        ox, oy, oz = origins[r]
        dx, dy, dz = dirs[r]
        px = dy * e2[:, 2] - dz * e2[:, 1]
        py = dz * e2[:, 0] - dx * e2[:, 2]
        pz = dx * e2[:, 1] - dy * e2[:, 0]
        det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
        ok = np.abs(det) >= DET_EPS
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            sx = ox - v0[:, 0]
            sy = oy - v0[:, 1]
            sz = oz - v0[:, 2]
            u = (sx * px + sy * py + sz * pz) * inv
            ok &= (u >= 0.0) & (u <= 1.0)
            qx = sy * e1[:, 2] - sz * e1[:, 1]
            qy = sz * e1[:, 0] - sx * e1[:, 2]
            qz = sx * e1[:, 1] - sy * e1[:, 0]
            v = (dx * qx + dy * qy + dz * qz) * inv
            ok &= (v >= 0.0) & (u + v <= 1.0)
            t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
        ok &= (t > RAY_EPS) & (t <= tmax[r])
        if ok.any():
            tt = np.where(ok, t, np.inf)
            f = int(np.argmin(tt))
            out_t[r] = tt[f]
            out_f[r] = f
    return out_t, out_f


# ---------------------------------------------------------------------------
# exact segment / triangle distance


@njit
def _dot(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit
def point_triangle_dist2(px, py, pz, a, b, c):
    """Squared distance from a point to a triangle (Voronoi-region walk)."""
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    acx, acy, acz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    apx, apy, apz = px - a[0], py - a[1], pz - a[2]
    d1 = _dot(abx, aby, abz, apx, apy, apz)
    d2 = _dot(acx, acy, acz, apx, apy, apz)
    if d1 <= 0.0 and d2 <= 0.0:
        qx, qy, qz = a[0], a[1], a[2]
    else:
        bpx, bpy, bpz = px - b[0], py - b[1], pz - b[2]
        d3 = _dot(abx, aby, abz, bpx, bpy, bpz)
        d4 = _dot(acx, acy, acz, bpx, bpy, bpz)
        cpx, cpy, cpz = px - c[0], py - c[1], pz - c[2]
        d5 = _dot(abx, aby, abz, cpx, cpy, cpz)
        d6 = _dot(acx, acy, acz, cpx, cpy, cpz)
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if d3 >= 0.0 and d4 <= d3:
            qx, qy, qz = b[0], b[1], b[2]
        elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
            w = d1 / (d1 - d3)
            qx, qy, qz = a[0] + w * abx, a[1] + w * aby, a[2] + w * abz
        elif d6 >= 0.0 and d5 <= d6:
            qx, qy, qz = c[0], c[1], c[2]
        elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
            w = d2 / (d2 - d6)
            qx, qy, qz = a[0] + w * acx, a[1] + w * acy, a[2] + w * acz
        elif va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            qx = b[0] + w * (c[0] - b[0])
            qy = b[1] + w * (c[1] - b[1])
            qz = b[2] + w * (c[2] - b[2])
        else:
            den = 1.0 / (va + vb + vc)
            v = vb * den
            w = vc * den
            qx = a[0] + abx * v + acx * w
            qy = a[1] + aby * v + acy * w
            qz = a[2] + abz * v + acz * w
    return (px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2


@njit
def _clamp01(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@njit
def segment_segment_dist2(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z):
    d1x, d1y, d1z = q1x - p1x, q1y - p1y, q1z - p1z
    d2x, d2y, d2z = q2x - p2x, q2y - p2y, q2z - p2z
    rx, ry, rz = p1x - p2x, p1y - p2y, p1z - p2z
    a = _dot(d1x, d1y, d1z, d1x, d1y, d1z)
    e = _dot(d2x, d2y, d2z, d2x, d2y, d2z)
    f = _dot(d2x, d2y, d2z, rx, ry, rz)
    eps = 1e-18
    if a <= eps and e <= eps:
        s = 0.0
        t = 0.0
    elif a <= eps:
        s = 0.0
        t = _clamp01(f / e)
    else:
        c = _dot(d1x, d1y, d1z, rx, ry, rz)
        if e <= eps:
            t = 0.0
            s = _clamp01(-c / a)
        else:
            b = _dot(d1x, d1y, d1z, d2x, d2y, d2z)
            den = a * e - b * b
            if den > eps * a * e:
                s = _clamp01((b * f - c * e) / den)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = _clamp01((b - c) / a)
    cx = p1x + d1x * s - (p2x + d2x * t)
    cy = p1y + d1y * s - (p2y + d2y * t)
    cz = p1z + d1z * s - (p2z + d2z * t)
    return cx * cx + cy * cy + cz * cz


@njit
def segment_triangle_dist2(ax, ay, az, bx, by, bz, v0, v1, v2):
    dx, dy, dz = bx - ax, by - ay, bz - az
    seg_len = np.sqrt(dx * dx + dy * dy + dz * dz)
    if seg_len > 0.0:
        t = moller_trumbore(ax, ay, az, dx / seg_len, dy / seg_len, dz / seg_len, v0, v1, v2)
        if t >= 0.0 and t <= seg_len:
            return 0.0
    best = point_triangle_dist2(ax, ay, az, v0, v1, v2)
    d = point_triangle_dist2(bx, by, bz, v0, v1, v2)
    if d < best:
        best = d
    d = segment_segment_dist2(ax, ay, az, bx, by, bz, v0[0], v0[1], v0[2], v1[0], v1[1], v1[2])
    if d < best:
        best = d
    d = segment_segment_dist2(ax, ay, az, bx, by, bz, v1[0], v1[1], v1[2], v2[0], v2[1], v2[2])
    if d < best:
        best = d
    d = segment_segment_dist2(ax, ay, az, bx, by, bz, v2[0], v2[1], v2[2], v0[0], v0[1], v0[2])
    if d < best:
        best = d
    return best


@njit
def _box_overlap(lo, hi, bmin, bmax):
    for k in range(3):
        if hi[k] < bmin[k] or lo[k] > bmax[k]:
            return False
    return True


@njit
def _segment_hits(bmin, bmax, left, start, count, right, tv0, tv1, tv2, a, b, reach, stack):
    lo = np.empty(3)
    hi = np.empty(3)
    for k in range(3):
        lo[k] = min(a[k], b[k]) - reach
        hi[k] = max(a[k], b[k]) + reach
    reach2 = reach * reach
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _box_overlap(lo, hi, bmin[node], bmax[node]):
            continue
        if left[node] < 0:
            s = start[node]
            for i in range(s, s + count[node]):
                d2 = segment_triangle_dist2(a[0], a[1], a[2], b[0], b[1], b[2], tv0[i], tv1[i], tv2[i])
                if d2 <= reach2:
                    return True
        else:
            stack[sp] = left[node]
            stack[sp + 1] = right[node]
            sp += 2
    return False


@njit
def segments_collide_batch(bmin, bmax, left, right, start, count, tv0, tv1, tv2, a, b, reach):
    """For each segment a[i]-b[i]: is any triangle within ``reach``?"""
    n = a.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    stack = np.empty(STACK, dtype=np.int64)
    for i in range(n):
        out[i] = _segment_hits(bmin, bmax, left, start, count, right, tv0, tv1, tv2,
                               a[i], b[i], reach, stack)
    return out


@njit
def polyline_collides(bmin, bmax, left, right, start, count, tv0, tv1, tv2, pts, reach):
    stack = np.empty(STACK, dtype=np.int64)
    if pts.shape[0] == 1:
        return _segment_hits(bmin, bmax, left, start, count, right, tv0, tv1, tv2,
                             pts[0], pts[0], reach, stack)
    for i in range(pts.shape[0] - 1):
        if _segment_hits(bmin, bmax, left, start, count, right, tv0, tv1, tv2,
                         pts[i], pts[i + 1], reach, stack):
            return True
    return False
