"""Collision checkers shared by the searches.

Planners only need four questions answered: is a point free, is a segment
free, is a polyline free, and is a target in line of sight. ``MeshCollision``
answers them against known geometry; ``occupancy.MapCollision`` against a
partially known voxel map.
"""

import numpy as np

from .geometry import polyline_collides, ray_cast_many, segments_collide


class MeshCollision:
    def __init__(self, mesh, clearance):
        self.mesh = mesh
        self.clearance = float(clearance)

    def point_free(self, p):
        p = np.asarray(p, dtype=np.float64)
        return not bool(segments_collide(self.mesh, p, p, self.clearance)[0])

    def segment_free(self, a, b):
        return not bool(segments_collide(self.mesh, a, b, self.clearance)[0])

    def segments_free(self, a, b):
        return ~segments_collide(self.mesh, a, b, self.clearance)

    def polyline_free(self, points):
        return not polyline_collides(self.mesh, points, self.clearance)

    def path_free(self, path, straight=False):
        """LocalPath check; straight paths need only their end segment."""
        if straight:
            return self.segment_free(path.points[0], path.points[-1])
        return self.polyline_free(path.points)

    def line_of_sight(self, origin, targets):
        targets = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        if self.mesh is None or len(targets) == 0:
            return np.ones(len(targets), dtype=bool)
        d = targets - origin
        dist = np.linalg.norm(d, axis=1)
        safe = np.where(dist > 0, dist, 1.0)
        t, _ = ray_cast_many(self.mesh, np.broadcast_to(origin, d.shape), d / safe[:, None],
                             np.maximum(dist - 1e-6, 1e-6))
        return ~np.isfinite(t)
