"""Probabilistic voxel map with Unknown / Free / Occupied states.

Storage is a dense grid over fixed bounds: per-voxel log-odds and observation
count. Log-odds are clamped to [L_MIN, L_MAX]; a voxel is Occupied when
observed with positive log-odds (probability above 0.5), Free when observed
otherwise, and Unknown until its first observation.
"""

import enum
import math
import struct

import numpy as np

from .errors import OriginOutOfBounds
from .kernels import voxel as vk
from .mesh_io import save_ply_points


def logit(p):
    return math.log(p / (1.0 - p))


P_HIT = 0.85
P_MISS = 0.4
L_HIT = logit(P_HIT)
L_MISS = -logit(P_MISS)  # magnitude of the free-space decrement
L_MIN = -2.0
L_MAX = 3.5
C_SAT = 10

_DUMP_MAGIC = b"ARWMAP1\0"


class VoxelState(enum.IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2


class OccupancyMap:
    def __init__(self, lo, hi, resolution):
        if not resolution > 0:
            raise ValueError("resolution must be positive")
        self.lo = np.asarray(lo, dtype=np.float64).reshape(3)
        hi = np.asarray(hi, dtype=np.float64).reshape(3)
        if np.any(hi <= self.lo):
            raise ValueError("bounds must have positive extent")
        self.res = float(resolution)
        self.shape = tuple(int(v) for v in np.ceil((hi - self.lo) / self.res - 1e-9))
        self.hi = self.lo + self.res * np.asarray(self.shape)
        self.logodds = np.zeros(self.shape)
        self.count = np.zeros(self.shape, dtype=np.int64)
        self._marks = np.zeros(self.shape, dtype=np.int8)

    @property
    def n_voxels(self):
        return int(np.prod(self.shape))

    @property
    def voxel_volume(self):
        return self.res ** 3

    def copy(self):
        m = OccupancyMap.__new__(OccupancyMap)
        m.lo, m.hi, m.res, m.shape = self.lo.copy(), self.hi.copy(), self.res, self.shape
        m.logodds = self.logodds.copy()
        m.count = self.count.copy()
        m._marks = np.zeros(self.shape, dtype=np.int8)
        return m

    @classmethod
    def ground_truth(cls, world, lo, hi, resolution, spacing=None):
        """Fully known map of ``world``: voxels holding surface samples Occupied, the rest Free.

        Surfaces are sampled on a barycentric grid no coarser than ``spacing``
        (default a quarter voxel), so every voxel a face passes through by more
        than that is caught.
        """
        m = cls(lo, hi, resolution)
        spacing = spacing or 0.25 * m.res
        m.count[:] = 1
        m.logodds[:] = L_MIN
        for tri in world.vertices:
            edge = max(np.linalg.norm(tri[1] - tri[0]), np.linalg.norm(tri[2] - tri[0]),
                       np.linalg.norm(tri[2] - tri[1]))
            k = max(1, int(np.ceil(edge / spacing)))
            i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
            keep = i + j <= k
            a, b = i[keep] / k, j[keep] / k
            pts = tri[0] + a[:, None] * (tri[1] - tri[0]) + b[:, None] * (tri[2] - tri[0])
            idx = np.floor((pts - m.lo) / m.res).astype(np.int64)
            ok = np.all((idx >= 0) & (idx < np.asarray(m.shape)), axis=1)
            idx = idx[ok]
            m.logodds[idx[:, 0], idx[:, 1], idx[:, 2]] = L_MAX
        return m

    # -- indexing ---------------------------------------------------------
    def contains(self, p):
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.lo) and np.all(p < self.hi))

    def index(self, p):
        """Voxel index of point ``p`` or None outside the bounds."""
        p = np.asarray(p, dtype=np.float64)
        if not self.contains(p):
            return None
        return tuple(int(v) for v in np.floor((p - self.lo) / self.res))

    def center(self, idx):
        return self.lo + (np.asarray(idx, dtype=np.float64) + 0.5) * self.res

    def centers(self):
        """(nx, ny, nz, 3) array of voxel centres."""
        axes = [self.lo[k] + (np.arange(self.shape[k]) + 0.5) * self.res for k in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    # -- state --------------------------------------------------------------
    def states(self):
        s = np.zeros(self.shape, dtype=np.int8)
        obs = self.count > 0
        s[obs & (self.logodds > 0.0)] = VoxelState.OCCUPIED
        s[obs & (self.logodds <= 0.0)] = VoxelState.FREE
        return s

    def state_at(self, p):
        idx = self.index(p)
        if idx is None or self.count[idx] == 0:
            return VoxelState.UNKNOWN
        return VoxelState.OCCUPIED if self.logodds[idx] > 0.0 else VoxelState.FREE

    def known_fraction(self, mask=None):
        obs = self.count > 0
        if mask is not None:
            return float(obs[mask].sum()) / max(1, int(mask.sum()))
        return float(obs.sum()) / self.n_voxels

    # -- updates ------------------------------------------------------------
    def integrate_rays(self, origin, directions, ranges, max_range):
        """Integrate rays given as unit directions and hit ranges (inf = miss)."""
        origin = np.asarray(origin, dtype=np.float64).reshape(3)
        if not self.contains(origin):
            raise OriginOutOfBounds(f"scan origin {origin.tolist()} outside map bounds")
        dirs = np.ascontiguousarray(np.asarray(directions, dtype=np.float64).reshape(-1, 3))
        ranges = np.asarray(ranges, dtype=np.float64).reshape(-1)
        hit = np.isfinite(ranges) & (ranges <= max_range)
        r = np.where(hit, ranges, max_range)
        return int(vk.integrate_rays(self.logodds, self.count, self.lo, self.res, origin, dirs, r, hit,
                                     float(max_range), L_HIT, L_MISS, L_MIN, L_MAX, self._marks))

    def integrate_scan(self, origin, hits, max_range, directions=None):
        """Integrate one scan; returns the number of voxels observed for the first time.

        ``hits`` holds a point or None per ray. Rays without a return need a
        unit vector in ``directions`` to update free space up to ``max_range``;
        without one they are skipped. A ``sensor.Scan`` may be passed as
        ``hits`` directly.
        """
        origin = np.asarray(origin, dtype=np.float64).reshape(3)
        if hasattr(hits, "ranges"):
            return self.integrate_rays(origin, hits.directions, hits.ranges, max_range)
        dirs, ranges = [], []
        for i, h in enumerate(hits):
            if h is None:
                if directions is None:
                    continue
                dirs.append(np.asarray(directions[i], dtype=np.float64))
                ranges.append(np.inf)
            else:
                d = np.asarray(h, dtype=np.float64) - origin
                n = float(np.linalg.norm(d))
                if n == 0.0:
                    continue
                dirs.append(d / n)
                ranges.append(n)
        if not dirs:
            if not self.contains(origin):
                raise OriginOutOfBounds(f"scan origin {origin.tolist()} outside map bounds")
            return 0
        return self.integrate_rays(origin, np.asarray(dirs), np.asarray(ranges), max_range)

    # -- view queries ---------------------------------------------------------
    def _frustum_candidates(self, config, sensor):
        p = config.position
        lo = np.floor((p - sensor.d_max - self.lo) / self.res).astype(int)
        hi = np.ceil((p + sensor.d_max - self.lo) / self.res).astype(int)
        lo = np.clip(lo, 0, np.asarray(self.shape))
        hi = np.clip(hi, 0, np.asarray(self.shape))
        if np.any(hi <= lo):
            return np.empty((0, 3), dtype=np.int64)
        axes = [np.arange(lo[k], hi[k]) for k in range(3)]
        I, J, K = np.meshgrid(*axes, indexing="ij")
        idx = np.stack([I.ravel(), J.ravel(), K.ravel()], axis=1)
        centers = self.lo + (idx + 0.5) * self.res
        ok = sensor.in_frustum(config, centers)
        return np.ascontiguousarray(idx[ok])

    def view_gains(self, config, sensor, c_sat=C_SAT, states=None):
        """(unknown voxel count, reobservation sum) visible from ``config``.

        A voxel is visible when its centre is inside the frustum and range band
        and no Occupied voxel lies between it and the sensor. ``states`` may
        pass a precomputed ``states()`` snapshot.
        """
        cand = self._frustum_candidates(config, sensor)
        if len(cand) == 0:
            return 0, 0.0
        states = self.states() if states is None else states
        u, r = vk.view_gains(states, self.count, self.lo, self.res, config.position, cand, c_sat)
        return int(u), float(r)

    def count_unknown_visible(self, config, sensor, states=None):
        return self.view_gains(config, sensor, states=states)[0]

    def line_of_sight(self, origin, targets):
        targets = np.ascontiguousarray(np.asarray(targets, dtype=np.float64).reshape(-1, 3))
        return vk.line_of_sight(self.states(), self.lo, self.res,
                                np.asarray(origin, dtype=np.float64), targets)

    # -- export ---------------------------------------------------------------
    def occupied_centers(self):
        idx = np.argwhere(self.states() == VoxelState.OCCUPIED)
        return self.lo + (idx + 0.5) * self.res

    def export_ply(self, path):
        """Occupied voxel centres coloured by height (blue low -> red high)."""
        pts = self.occupied_centers()
        if len(pts):
            z = pts[:, 2]
            span = max(z.max() - z.min(), 1e-9)
            h = (z - z.min()) / span
            colors = np.stack([255 * h, 255 * (1 - np.abs(2 * h - 1)), 255 * (1 - h)], axis=1)
            colors = np.round(colors).astype(np.uint8)
        else:
            colors = np.empty((0, 3), dtype=np.uint8)
        save_ply_points(pts, path, colors)

    def dump(self, path):
        """Binary dump of (i, j, k, log-odds, count) for every observed voxel."""
        idx = np.argwhere(self.count > 0)
        with open(path, "wb") as fh:
            fh.write(_DUMP_MAGIC)
            fh.write(struct.pack("<3d3qd", *self.lo, *self.shape, self.res))
            fh.write(struct.pack("<q", len(idx)))
            rec = np.zeros(len(idx), dtype=[("ijk", "<i4", 3), ("logodds", "<f8"), ("count", "<i8")])
            rec["ijk"] = idx
            rec["logodds"] = self.logodds[tuple(idx.T)]
            rec["count"] = self.count[tuple(idx.T)]
            fh.write(rec.tobytes())

    @classmethod
    def load_dump(cls, path):
        with open(path, "rb") as fh:
            data = fh.read()
        if not data.startswith(_DUMP_MAGIC):
            raise ValueError("not an occupancy dump")
        off = len(_DUMP_MAGIC)
        vals = struct.unpack_from("<3d3qd", data, off)
        off += struct.calcsize("<3d3qd")
        (n,) = struct.unpack_from("<q", data, off)
        off += 8
        lo, shape, res = np.array(vals[:3]), vals[3:6], vals[6]
        m = cls(lo, lo + res * np.asarray(shape), res)
        rec = np.frombuffer(data, dtype=[("ijk", "<i4", 3), ("logodds", "<f8"), ("count", "<i8")],
                            count=n, offset=off)
        ijk = tuple(rec["ijk"].astype(np.int64).T)
        m.logodds[ijk] = rec["logodds"]
        m.count[ijk] = rec["count"]
        return m


class MapCollision:
    """Collision checks against a voxel map: only Free voxels are traversable."""

    def __init__(self, omap, clearance):
        self.map = omap
        self.clearance = float(clearance)
        self._state = omap.states()

    def refresh(self):
        self._state = self.map.states()

    def point_free(self, p):
        p = np.asarray(p, dtype=np.float64)
        return bool(vk.segment_in_free(self._state, self.map.lo, self.map.res, p, p, self.clearance))

    def segment_free(self, a, b):
        return bool(vk.segment_in_free(self._state, self.map.lo, self.map.res,
                                       np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64),
                                       self.clearance))

    def segments_free(self, a, b):
        return np.array([self.segment_free(x, y) for x, y in zip(a, b)], dtype=bool)

    def polyline_free(self, points):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 1:
            return self.point_free(pts[0])
        return all(self.segment_free(pts[i], pts[i + 1]) for i in range(len(pts) - 1))

    def path_free(self, path, straight=False):
        if straight:
            return self.segment_free(path.points[0], path.points[-1])
        return self.polyline_free(path.points)

    def line_of_sight(self, origin, targets):
        return self.map.line_of_sight(origin, targets)
