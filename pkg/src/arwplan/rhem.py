"""Uncertainty-aware exploration with a pose + landmark belief.

Layer 1 is the next-best-view tree with an extra reobservation term in the
node gain. Layer 2 plans several admissible paths to the first view of the
best branch, propagates the belief along each with an EKF and executes the one
whose final covariance has the smallest D-optimality.

State ordering: x, y, z, yaw, then landmark positions by ascending id.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoAdmissibleSecondLayerPath, NoPathWithinBudget, NotSPD
from .geometry import Configuration, wrap_angle
from .nbv import ExplorationLog, ExploreParams, build_view_tree, node_gain, sense, step_rng
from .occupancy import MapCollision, OccupancyMap
from .path_search import Budget, plan_point_to_point
from .sensor import points_visible
from .vehicle import connect

log = logging.getLogger(__name__)

EIG_FLOOR = 1e-10
SPD_MIN = 1e-12


@dataclass(frozen=True)
class Landmark:
    id: int
    position: tuple
    active: bool = True


@dataclass(frozen=True)
class NoiseParams:
    """Odometry noise per metre travelled (x, y, z, yaw variances) and bearing variance."""

    q_per_m: tuple = (0.01 ** 2, 0.01 ** 2, 0.01 ** 2, math.radians(0.5) ** 2)
    r_bearing: float = math.radians(1.0) ** 2

    @classmethod
    def zero(cls):
        return cls((0.0, 0.0, 0.0, 0.0), 0.0)


@dataclass
class Belief:
    mean: np.ndarray
    cov: np.ndarray
    landmark_ids: tuple = ()

    @property
    def pose(self):
        return self.mean[:4]

    @property
    def n_landmarks(self):
        return len(self.landmark_ids)

    def landmark(self, k):
        return self.mean[4 + 3 * k: 7 + 3 * k]

    def copy(self):
        return Belief(self.mean.copy(), self.cov.copy(), self.landmark_ids)

    @classmethod
    def initial(cls, pose, landmarks, pose_var=(1e-4, 1e-4, 1e-4, math.radians(1.0) ** 2), landmark_var=0.3 ** 2):
        lms = sorted((lm for lm in landmarks if lm.active), key=lambda lm: lm.id)
        ids = tuple(lm.id for lm in lms)
        if len(set(ids)) != len(ids):
            raise ValueError("landmark ids must be unique")
        mean = np.concatenate([np.asarray(pose, dtype=np.float64)[:4]] +
                              [np.asarray(lm.position, dtype=np.float64) for lm in lms])
        cov = np.diag(np.concatenate([np.asarray(pose_var, dtype=np.float64),
                                      np.full(3 * len(lms), landmark_var)]))
        return cls(mean, cov, ids)


def _check_spd(cov):
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
        raise NotSPD("covariance is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotSPD("covariance is not positive definite") from None


def d_optimality(cov):
    """Geometric mean of the eigenvalues, exp(log det / n)."""
    cov = np.asarray(cov, dtype=np.float64)
    L = _check_spd(cov)
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    return math.exp(logdet / len(cov))


def bearing(pose, point):
    """Unit vector to ``point`` in the body frame (yaw only)."""
    c, s = math.cos(pose[3]), math.sin(pose[3])
    d = np.asarray(point, dtype=np.float64) - pose[:3]
    b = np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]])
    return b / np.linalg.norm(b)


def bearing_jacobians(pose, point):
    """(d bearing / d pose (3x4), d bearing / d point (3x3))."""
    c, s = math.cos(pose[3]), math.sin(pose[3])
    d = np.asarray(point, dtype=np.float64) - pose[:3]
    Rt = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    v = Rt @ d
    r = np.linalg.norm(v)
    u = v / r
    N = (np.eye(3) - np.outer(u, u)) / r  # derivative of v / |v|
    dR = np.array([[-s, c, 0.0], [-c, -s, 0.0], [0.0, 0.0, 0.0]])  # d Rt / d yaw
    J_point = N @ Rt
    J_pose = np.empty((3, 4))
    J_pose[:, :3] = -J_point
    J_pose[:, 3] = N @ (dR @ d)
    return J_pose, J_point


def _finish(cov):
    cov = 0.5 * (cov + cov.T)
    w = np.linalg.eigvalsh(cov)
    if w[0] < EIG_FLOOR:
        # only reached with (near) zero measurement noise
        w, V = np.linalg.eigh(cov)
        cov = (V * np.maximum(w, EIG_FLOOR)) @ V.T
        cov = 0.5 * (cov + cov.T)
    return cov


def predict(belief, new_pose, noise):
    """Move the pose mean to ``new_pose``; add odometry noise scaled by distance."""
    b = belief.copy()
    dist = float(np.linalg.norm(np.asarray(new_pose[:3]) - b.mean[:3]))
    b.mean[:3] = new_pose[:3]
    b.mean[3] = wrap_angle(float(new_pose[3]))
    b.cov[:4, :4] += np.diag(noise.q_per_m) * dist
    b.cov = _finish(b.cov)
    return b


def update(belief, k, noise):
    """EKF update with a bearing measurement of landmark ``k`` (index in the state)."""
    b = belief.copy()
    n = len(b.mean)
    Jp, Jl = bearing_jacobians(b.mean[:4], b.landmark(k))
    H = np.zeros((3, n))
    H[:, :4] = Jp
    H[:, 4 + 3 * k: 7 + 3 * k] = Jl
    R = noise.r_bearing * np.eye(3)
    S = H @ b.cov @ H.T + R
    if noise.r_bearing <= 0.0:
        S = S + SPD_MIN * np.eye(3)
    K = np.linalg.solve(S.T, (b.cov @ H.T).T).T
    # simulated measurements equal the prediction, so the mean is unchanged
    IKH = np.eye(n) - K @ H
    b.cov = _finish(IKH @ b.cov @ IKH.T + K @ R @ K.T)
    return b


def dense_waypoints(vehicle, configs):
    """(N, 4) waypoints along consecutive local paths through ``configs``."""
    configs = list(configs)
    if len(configs) == 1:
        return np.asarray([configs[0]], dtype=np.float64)
    parts = [np.asarray([configs[0]], dtype=np.float64)]
    for a, c in zip(configs[:-1], configs[1:]):
        parts.append(connect(vehicle, a, c).waypoints[1:])
    return np.concatenate(parts)


def propagate_belief(belief, waypoints, landmarks, sensor, noise, occluder=None):
    """Predict along ``waypoints`` (N x 4; the first is the current pose) and update
    with every landmark visible at each later waypoint.

    Returns (belief, set of landmark ids seen).
    """
    _check_spd(belief.cov)
    wp = np.asarray(getattr(waypoints, "waypoints", waypoints), dtype=np.float64)
    index = {lid: k for k, lid in enumerate(belief.landmark_ids)}
    lms = [lm for lm in landmarks if lm.active and lm.id in index]
    pts = np.array([lm.position for lm in lms], dtype=np.float64).reshape(-1, 3)
    seen = set()
    b = belief
    for w in wp[1:]:
        b = predict(b, w, noise)
        if len(lms):
            cfg = Configuration(*map(float, w))
            vis = points_visible(sensor, cfg, pts, occluder)
            for i in np.flatnonzero(vis):
                b = update(b, index[lms[i].id], noise)
                seen.add(lms[i].id)
    return b, seen


def reobservation_gain(omap, config, sensor, states=None):
    """Sum over visible observed voxels of (1 - count / C_sat), counts capped at C_sat."""
    return omap.view_gains(config, sensor, states=states)[1]


@dataclass
class SecondLayer:
    candidates: list  # list of configuration lists; None where planning failed
    d_opt: list
    beliefs: list
    seen: list
    chosen: int


def second_layer(belief, cur, target, omap, vehicle, sensor, landmarks, noise, M, seed, step,
                 checker=None, budget=None):
    """Candidate 0 is the direct connection; candidates 1.. are RRT* runs with
    distinct seeds. Returns the candidates and the index with minimal D-opt
    (lowest index on ties)."""
    checker = checker or MapCollision(omap, vehicle.clearance)
    budget = budget or Budget(max_iterations=300)
    cands, dopt, beliefs, seen = [], [], [], []
    for m in range(M):
        path = None
        if m == 0:
            lp = connect(vehicle, cur, target)
            if lp is not None and checker.path_free(lp, straight=vehicle.holonomic):
                path = [cur, target]
        else:
            try:
                res = plan_point_to_point(vehicle, None, cur, target, budget, checker=checker,
                                          bounds=(omap.lo, omap.hi), allow_direct=False, smooth=False,
                                          rng=step_rng(seed, step, m))
                path = list(res.path)
            except NoPathWithinBudget:
                path = None
        cands.append(path)
        if path is None:
            dopt.append(math.inf)
            beliefs.append(None)
            seen.append(set())
            continue
        b, s = propagate_belief(belief, dense_waypoints(vehicle, path), landmarks, sensor, noise, checker)
        cands[-1] = path
        dopt.append(d_optimality(b.cov))
        beliefs.append(b)
        seen.append(s)
    if not np.isfinite(dopt).any():
        raise NoAdmissibleSecondLayerPath(f"no admissible path to {tuple(round(v, 3) for v in target)}")
    return SecondLayer(cands, dopt, beliefs, seen, int(np.argmin(dopt)))


@dataclass(frozen=True)
class RhemParams:
    w_explore: float = 1.0
    w_reobs: float = 0.001
    M: int = 4


@dataclass
class RhemLog(ExplorationLog):
    layers: list = field(default_factory=list)  # SecondLayer per step
    beliefs: list = field(default_factory=list)  # belief after each step


def explore_uncertainty_aware(world, start, sensor, vehicle, landmarks, map_params, rhem=None,
                              params=None, noise=None, seed=0, belief=None):
    """Two-layer exploration; returns an RhemLog."""
    rhem = rhem or RhemParams()
    params = params or ExploreParams()
    noise = noise or NoiseParams()
    if rhem.M < 1:
        raise ValueError("need at least one second-layer candidate")
    omap = OccupancyMap(map_params.lo, map_params.hi, map_params.resolution)
    cur = Configuration(*map(float, start))
    belief = belief or Belief.initial(cur, landmarks)
    _check_spd(belief.cov)
    out = RhemLog(path=[cur], map=omap, beliefs=[belief])

    def gain_fn(c, st):
        g = rhem.w_explore * node_gain(omap, c, sensor, st)
        if rhem.w_reobs:
            g += rhem.w_reobs * reobservation_gain(omap, c, sensor, st)
        return g

    for step in range(params.max_steps):
        sense(omap, sensor, cur, world, params)
        checker = MapCollision(omap, vehicle.clearance)
        tree = build_view_tree(omap, vehicle, sensor, cur, params.n_nodes, params.max_edge,
                               step_rng(seed, step), params.lam, gain_fn=gain_fn, checker=checker)
        best = tree.best()
        row = {"step": step, "x": cur.x, "y": cur.y, "z": cur.z, "yaw": cur.yaw,
               "gain": tree.value[best], "known_fraction": omap.known_fraction()}
        out.rows.append(row)
        if tree.value[best] < params.g_min:
            out.status = "converged"
            break
        nxt = tree.first_step(best)
        if nxt < 0:
            out.status = "stuck"
            log.warning("step %d: no Free expansion from the current view", step)
            break
        target = tree.configs[nxt]
        try:
            layer = second_layer(belief, cur, target, omap, vehicle, sensor, landmarks, noise, rhem.M,
                                 seed, step, checker)
            path = layer.candidates[layer.chosen]
            belief = layer.beliefs[layer.chosen]
            others = [d for i, d in enumerate(layer.d_opt) if i != layer.chosen and math.isfinite(d)]
            row.update(d_opt_chosen=layer.d_opt[layer.chosen],
                       d_opt_best_alternative=min(others) if others else math.nan,
                       n_landmarks_visible=len(layer.seen[layer.chosen]))
        except NoAdmissibleSecondLayerPath as e:
            log.warning("step %d: %s; following the layer-1 edge", step, e)
            layer = None
            path = [cur, target]
            belief, seen = propagate_belief(belief, dense_waypoints(vehicle, path), landmarks, sensor,
                                            noise, checker)
            row.update(d_opt_chosen=d_optimality(belief.cov), d_opt_best_alternative=math.nan,
                       n_landmarks_visible=len(seen))
        out.layers.append(layer)
        out.beliefs.append(belief)
        out.path.extend(path[1:])
        cur = target
    return out
