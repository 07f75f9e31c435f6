"""Local paths between configurations and their execution-time cost."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import dubins
from .geometry import Configuration, wrap_angle

WAYPOINT_SPACING = 0.05


class VehicleKind(str, Enum):
    HOLONOMIC = "holonomic"
    NONHOLONOMIC = "nonholonomic"


@dataclass(frozen=True)
class VehicleModel:
    kind: VehicleKind = VehicleKind.HOLONOMIC
    v_max: float = 0.25
    yaw_rate_max: float = 0.5
    clearance: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", VehicleKind(self.kind))
        if not self.v_max > 0 or not self.yaw_rate_max > 0:
            raise ValueError("v_max and yaw_rate_max must be positive")
        if not self.clearance >= 0:
            raise ValueError("clearance must be non-negative")

    @property
    def holonomic(self):
        return self.kind is VehicleKind.HOLONOMIC

    @property
    def turn_radius(self):
        return self.v_max / self.yaw_rate_max


@dataclass(frozen=True)
class LocalPath:
    """Waypoints as an (N, 4) array of x, y, z, yaw; cost in seconds."""

    start: Configuration
    end: Configuration
    waypoints: np.ndarray
    cost: float

    @property
    def points(self):
        return self.waypoints[:, :3]

    @property
    def configurations(self):
        return [Configuration(*map(float, w)) for w in self.waypoints]

    @property
    def length(self):
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def _holonomic_cost(vehicle, a, b):
    dist = math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))
    dyaw = abs(wrap_angle(b.yaw - a.yaw))
    return max(dist / vehicle.v_max, dyaw / vehicle.yaw_rate_max), dist


def _dubins(vehicle, a, b):
    return dubins.shortest((a.x, a.y, a.yaw), (b.x, b.y, b.yaw), vehicle.turn_radius)


def connect_cost(vehicle, a, b):
    """Cost of ``connect(vehicle, a, b)`` without building waypoints (inf if infeasible)."""
    if vehicle.holonomic:
        return _holonomic_cost(vehicle, a, b)[0]
    path = _dubins(vehicle, a, b)
    if path is None:
        return math.inf
    return math.hypot(path.length, b.z - a.z) / vehicle.v_max


def connect(vehicle, a, b) -> Optional[LocalPath]:
    """Local path from ``a`` to ``b``.

    Holonomic vehicles fly the straight segment while turning to the new yaw,
    both at full rate, so the cost is the slower of the two. Nonholonomic
    vehicles follow the horizontal Dubins curve (turn radius v_max / yaw_rate_max)
    with altitude interpolated linearly and yaw tangent to the curve.
    """
    if vehicle.holonomic:
        cost, dist = _holonomic_cost(vehicle, a, b)
        n = max(1, math.ceil(dist / WAYPOINT_SPACING))
        s = np.linspace(0.0, 1.0, n + 1)
        pa, pb = np.array(a[:3]), np.array(b[:3])
        pts = pa + s[:, None] * (pb - pa)
        dyaw = wrap_angle(b.yaw - a.yaw)
        yaw = np.array([wrap_angle(a.yaw + si * dyaw) for si in s])
        yaw[-1] = b.yaw
        wp = np.column_stack([pts, yaw])
        wp[0] = a
        wp[-1] = b
        return LocalPath(a, b, wp, cost)

    path = _dubins(vehicle, a, b)
    if path is None:
        return None
    L = path.length
    dz = b.z - a.z
    L3 = math.hypot(L, dz)
    n = max(1, math.ceil(L3 / WAYPOINT_SPACING))
    wp = np.empty((n + 1, 4))
    for i in range(n + 1):
        f = i / n
        x, y, h = path.sample(f * L)
        wp[i] = (x, y, a.z + f * dz, wrap_angle(h))
    wp[0] = a
    wp[-1] = b
    return LocalPath(a, b, wp, L3 / vehicle.v_max)


def path_cost(vehicle, configs):
    """Sum of connect costs over consecutive configurations (inf if any leg is infeasible)."""
    total = 0.0
    for a, b in zip(configs[:-1], configs[1:]):
        c = connect_cost(vehicle, a, b)
        if not math.isfinite(c):
            return math.inf
        total += c
    return total


def cost_matrix(vehicle, configs):
    """Dense matrix of connect costs between all ordered pairs."""
    n = len(configs)
    if vehicle.holonomic:
        P = np.array([c[:3] for c in configs], dtype=np.float64).reshape(n, 3)
        Y = np.array([c.yaw for c in configs], dtype=np.float64)
        dist = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        dyaw = np.abs((Y[None, :] - Y[:, None] + math.pi) % (2 * math.pi) - math.pi)
        return np.maximum(dist / vehicle.v_max, dyaw / vehicle.yaw_rate_max)
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                M[i, j] = connect_cost(vehicle, configs[i], configs[j])
    return M
