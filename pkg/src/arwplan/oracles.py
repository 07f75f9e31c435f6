"""Brute-force reference implementations used by the tests and ``arwplan oracle``.

These deliberately avoid the package's acceleration structures and solvers:
exhaustive per-triangle ray casts, a rotation-matrix frustum, full TSP
enumeration, a textbook dense EKF step and grid Dijkstra on the plane.
"""

import math

import numpy as np

RAY_EPS = 1e-6
DET_EPS = 1e-12
OCCLUSION_TOL = 1e-6


# -- rays and visibility --------------------------------------------------------

def exhaustive_ray_cast(vertices, origins, dirs, tmax):
    """Nearest hit of every ray against every triangle: (t, face) arrays, (inf, -1) on a miss.

    All rays are tested against all faces at once; the arithmetic is the
    textbook Moller-Trumbore sequence with no spatial pruning.
    """
    V = np.asarray(vertices, dtype=np.float64)
    O = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    D = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    tmax = np.broadcast_to(np.asarray(tmax, dtype=np.float64), (len(O),))[:, None]
    a = V[None, :, 0]
    e1 = V[None, :, 1] - a
    e2 = V[None, :, 2] - a
    dx, dy, dz = D[:, None, 0], D[:, None, 1], D[:, None, 2]
    px = dy * e2[..., 2] - dz * e2[..., 1]
    py = dz * e2[..., 0] - dx * e2[..., 2]
    pz = dx * e2[..., 1] - dy * e2[..., 0]
    det = e1[..., 0] * px + e1[..., 1] * py + e1[..., 2] * pz
    ok = np.abs(det) >= DET_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        sx = O[:, None, 0] - a[..., 0]
        sy = O[:, None, 1] - a[..., 1]
        sz = O[:, None, 2] - a[..., 2]
        u = (sx * px + sy * py + sz * pz) * inv
        qx = sy * e1[..., 2] - sz * e1[..., 1]
        qy = sz * e1[..., 0] - sx * e1[..., 2]
        qz = sx * e1[..., 1] - sy * e1[..., 0]
        v = (dx * qx + dy * qy + dz * qz) * inv
        t = (e2[..., 0] * qx + e2[..., 1] * qy + e2[..., 2] * qz) * inv
    ok &= (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t > RAY_EPS) & (t <= tmax)
    t = np.where(ok, t, np.inf)
    face = np.argmin(t, axis=1)  # first index among equal minima
    best = t[np.arange(len(O)), face]
    face = np.where(np.isfinite(best), face, -1)
    return best, face


def camera_rotation(yaw, pitch):
    """World-from-camera rotation: pitch about y (negative looks down), then yaw about z."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(-pitch), math.sin(-pitch)
    Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    return Rz @ Ry


def exhaustive_visible_set(sensor, config, mesh, occluder=None):
    """Faces passing frustum, range, incidence and an all-faces occlusion cast."""
    occ = mesh if occluder is None else occluder
    R = camera_rotation(config[3], sensor.pitch)
    o = np.array(config[:3], dtype=np.float64)
    d = mesh.centroids - o
    dist = np.sqrt((d * d).sum(axis=1))
    cam = d @ R
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    ok = (x > 0) & (np.abs(np.arctan2(y, x)) <= sensor.hfov / 2) & (np.abs(np.arctan2(z, x)) <= sensor.vfov / 2)
    ok &= (dist >= sensor.d_min) & (dist <= sensor.d_max)
    with np.errstate(invalid="ignore", divide="ignore"):
        ok &= -(d * mesh.normals).sum(axis=1) / dist >= math.cos(sensor.max_incidence)
    idx = np.flatnonzero(ok)
    if len(idx):
        t, _ = exhaustive_ray_cast(occ.vertices, np.broadcast_to(o, (len(idx), 3)), d[idx] / dist[idx, None],
                                   dist[idx] - OCCLUSION_TOL)
        idx = idx[~np.isfinite(t)]
    return set(idx.tolist())


# -- tours ------------------------------------------------------------------------

def random_symmetric_matrix(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 10.0, (n, 2))
    return np.linalg.norm(pts[:, None] - pts[None], axis=2)


def enumerate_tour(M):
    """Minimum closed-tour cost by recursion over permutations with node 0 fixed."""
    import itertools

    n = len(M)
    best = math.inf
    for perm in itertools.permutations(range(1, n)):
        c = M[0, perm[0]] + sum(M[perm[i], perm[i + 1]] for i in range(n - 2)) + M[perm[-1], 0]
        best = min(best, c)
    return best


# -- belief ---------------------------------------------------------------------

def dense_ekf_step(mean, P, new_pose, landmark_index, q_per_m, r_var):
    """One prediction to ``new_pose`` plus one bearing update, written out densely."""
    mean = np.array(mean, dtype=np.float64)
    P = np.array(P, dtype=np.float64)
    n = len(mean)
    step = np.linalg.norm(np.asarray(new_pose[:3]) - mean[:3])
    mean[:4] = new_pose[:4]
    Q = np.zeros((n, n))
    Q[:4, :4] = np.diag(q_per_m) * step
    P = P + Q
    yaw = mean[3]
    k = 4 + 3 * landmark_index
    lm = mean[k:k + 3]
    Rwb = np.array([[math.cos(yaw), -math.sin(yaw), 0.0], [math.sin(yaw), math.cos(yaw), 0.0], [0.0, 0.0, 1.0]])
    g = Rwb.T @ (lm - mean[:3])
    ng = np.linalg.norm(g)
    dh_dg = np.eye(3) / ng - np.outer(g, g) / ng ** 3
    dRt = np.array([[-math.sin(yaw), math.cos(yaw), 0.0], [-math.cos(yaw), -math.sin(yaw), 0.0], [0.0, 0.0, 0.0]])
    H = np.zeros((3, n))
    H[:, 0:3] = dh_dg @ (-Rwb.T)
    H[:, 3] = dh_dg @ (dRt @ (lm - mean[:3]))
    H[:, k:k + 3] = dh_dg @ Rwb.T
    S = H @ P @ H.T + r_var * np.eye(3)
    K = P @ H.T @ np.linalg.inv(S)
    P = (np.eye(n) - K @ H) @ P
    return mean, 0.5 * (P + P.T)


# -- planar shortest paths --------------------------------------------------------

def grid_shortest_path(p, q, polygons, h=0.02, reach=3, margin=0.5):
    """Shortest p -> q distance on a fine grid avoiding polygon interiors.

    Moves go to every node within ``reach`` cells along a primitive direction,
    so directions are quantized much more finely than on an 8-connected grid.
    """
    import shapely
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    pts = [p, q] + [np.asarray(poly.exterior.coords) for poly in polygons]
    allp = np.vstack([np.atleast_2d(a) for a in pts])
    lo = allp.min(axis=0) - margin
    hi = allp.max(axis=0) + margin
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 1
    X, Y = np.meshgrid(lo[0] + h * np.arange(nx), lo[1] + h * np.arange(ny), indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), ])
    nodes = np.vstack([nodes, p, q])
    src, dst = len(nodes) - 2, len(nodes) - 1

    def blocked(a, b, samples=8):
        out = np.zeros(len(a), dtype=bool)
        for s in np.linspace(0.0, 1.0, samples + 1):
            m = a + s * (b - a)
            for poly in polygons:
                out |= shapely.contains_xy(poly, m[:, 0], m[:, 1])
        return out

    moves = [(dx, dy) for dx in range(-reach, reach + 1) for dy in range(-reach, reach + 1)
             if (dx, dy) != (0, 0) and math.gcd(abs(dx), abs(dy)) == 1]
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    rows, cols, w = [], [], []
    for dx, dy in moves:
        I2, J2 = I + dx, J + dy
        ok = (I2 >= 0) & (I2 < nx) & (J2 >= 0) & (J2 < ny)
        a = I[ok] * ny + J[ok]
        b = I2[ok] * ny + J2[ok]
        free = ~blocked(nodes[a], nodes[b])
        rows.append(a[free])
        cols.append(b[free])
        w.append(np.full(free.sum(), h * math.hypot(dx, dy)))
    # the exact endpoints join every grid node within reach
    for e in (src, dst):
        d = np.linalg.norm(nodes[:-2] - nodes[e], axis=1)
        near = np.flatnonzero(d <= reach * h)
        free = ~blocked(np.repeat(nodes[e][None], len(near), 0), nodes[near])
        near = near[free]
        rows += [np.full(len(near), e), near]
        cols += [near, np.full(len(near), e)]
        w += [d[near], d[near]]
    G = coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(len(nodes), len(nodes))).tocsr()
    return float(dijkstra(G, directed=True, indices=src)[dst])


# -- segment distance ---------------------------------------------------------------

def segment_triangle_distance(a, b, tri):
    """Exact distance by enumerating the faces of the (s, u, v) prism.

    The squared distance is a convex quadratic over s in [0, 1] and (u, v) in
    the unit simplex; its minimizer is the stationary point of the restriction
    to some face of that prism, so solving every face and keeping the feasible
    candidates gives the global minimum.
    """
    import itertools

    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    T = np.asarray(tri, dtype=np.float64)
    A = np.column_stack([b - a, -(T[1] - T[0]), -(T[2] - T[0])])
    c = T[0] - a
    G = np.array([[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 0, -1], [0, 1, 1]], dtype=np.float64)
    h = np.array([0, 1, 0, 0, 1], dtype=np.float64)
    Q = 2.0 * A.T @ A
    best = math.inf
    for k in range(4):
        for active in itertools.combinations(range(5), k):
            E = G[list(active)]
            K = np.zeros((3 + k, 3 + k))
            K[:3, :3] = Q
            K[:3, 3:] = E.T
            K[3:, :3] = E
            rhs = np.concatenate([2.0 * A.T @ c, h[list(active)]])
            x = np.linalg.lstsq(K, rhs, rcond=None)[0][:3]
            if np.all(G @ x <= h + 1e-12):
                best = min(best, float(np.linalg.norm(A @ x - c)))
    return best


# -- voxels -------------------------------------------------------------------------

def boxes_crossed(o, e, lo, res, shape):
    """Boolean grid: voxels whose box the segment o -> e passes through with positive length."""
    o = np.asarray(o, dtype=np.float64)
    d = np.asarray(e, dtype=np.float64) - o
    axes = [lo[k] + res * np.arange(shape[k]) for k in range(3)]
    t0 = np.zeros(shape)
    t1 = np.ones(shape)
    for k in range(3):
        b0 = axes[k].reshape([-1 if j == k else 1 for j in range(3)])
        b1 = b0 + res
        if d[k] == 0.0:
            inside = (o[k] >= b0) & (o[k] < b1)
            t1 = np.where(inside, t1, -1.0)
            continue
        ta = (b0 - o[k]) / d[k]
        tb = (b1 - o[k]) / d[k]
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    return t1 > t0


def single_scan_states(lo, res, shape, origin, ends, hit):
    """Voxel states (0 unknown, 1 free, 2 occupied) after one scan on a fresh map."""
    lo = np.asarray(lo, dtype=np.float64)
    free = np.zeros(shape, dtype=bool)
    occ = np.zeros(shape, dtype=bool)
    for e, h in zip(ends, hit):
        free |= boxes_crossed(origin, e, lo, res, shape)
        if h:
            idx = np.floor((np.asarray(e) - lo) / res).astype(int)
            if np.all((idx >= 0) & (idx < np.asarray(shape))):
                occ[tuple(idx)] = True
    st = np.zeros(shape, dtype=np.int8)
    st[free] = 1
    st[occ] = 2
    return st


def visible_voxels(states, lo, res, sensor, config):
    """Voxel indices whose centre is in the frustum/range band and whose sight line
    from the sensor crosses no occupied voxel other than itself."""
    lo = np.asarray(lo, dtype=np.float64)
    shape = states.shape
    I, J, K = np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")
    idx = np.stack([I.ravel(), J.ravel(), K.ravel()], axis=1)
    centers = lo + (idx + 0.5) * res
    o = np.array(config[:3], dtype=np.float64)
    R = camera_rotation(config[3], sensor.pitch)
    d = centers - o
    dist = np.sqrt((d * d).sum(axis=1))
    cam = d @ R
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    ok = (x > 0) & (np.abs(np.arctan2(y, x)) <= sensor.hfov / 2) & (np.abs(np.arctan2(z, x)) <= sensor.vfov / 2)
    ok &= (dist >= sensor.d_min) & (dist <= sensor.d_max)
    occ = states == 2
    out = []
    for i in np.flatnonzero(ok):
        crossed = boxes_crossed(o, centers[i], lo, res, shape) & occ
        crossed[tuple(idx[i])] = False
        if not crossed.any():
            out.append(tuple(int(v) for v in idx[i]))
    return out
