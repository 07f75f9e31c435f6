import math

import numpy as np
import pytest

from arwplan import oracles
from arwplan.errors import NotSPD
from arwplan.geometry import Configuration
from arwplan.nbv import ExploreParams, MapParams, explore
from arwplan.occupancy import C_SAT, OccupancyMap, VoxelState
from arwplan.rhem import (Belief, Landmark, NoiseParams, RhemParams, d_optimality, explore_uncertainty_aware,
                          predict, propagate_belief, reobservation_gain, second_layer, update)
from arwplan.sensor import simulate_scan

from scenes import ROOM_LANDMARKS, corridors, geometric_mean_eig, north, south

ROOM_MAP = MapParams((-0.1, -0.1, -0.1), (4.1, 4.1, 2.1), 0.2)
START = (2.0, 2.0, 1.0, 0.0)


def random_spd(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    return A @ A.T + 0.1 * np.eye(n)


def test_d_opt_examples():
    assert d_optimality(np.eye(3)) == pytest.approx(1.0, abs=1e-15)
    assert d_optimality(np.diag([4.0, 1.0, 1.0])) == pytest.approx(4 ** (1 / 3), rel=1e-14)
    for seed in range(5):
        C = random_spd(7, seed)
        assert d_optimality(C) == pytest.approx(geometric_mean_eig(C), rel=1e-10)


def test_d_opt_rejects_non_spd():
    with pytest.raises(NotSPD):
        d_optimality(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(NotSPD):
        d_optimality(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_prediction_only_growth(sensor):
    b = Belief.initial(START, [])
    path = np.array([START, (2.5, 2.0, 1.0, 0.0), (3.0, 2.2, 1.0, 0.3)])
    out, seen = propagate_belief(b, path, [], sensor, NoiseParams())
    assert not seen
    assert d_optimality(out.cov[:4, :4]) > d_optimality(b.cov[:4, :4])


def test_zero_noise_prediction_keeps_pose_d_opt(sensor):
    b = Belief.initial(START, [])
    path = np.array([START, (2.5, 2.0, 1.0, 0.0), (3.0, 2.2, 1.0, 0.3)])
    out, _ = propagate_belief(b, path, [], sensor, NoiseParams.zero())
    assert d_optimality(out.cov[:4, :4]) == pytest.approx(d_optimality(b.cov[:4, :4]), rel=1e-12)


def test_stationary_updates_reduce_pose_trace(sensor):
    lm = [Landmark(0, (3.5, 2.1, 0.7))]
    b = Belief.initial(START, lm)
    path = np.array([START] * 20)
    noise = NoiseParams()
    with_lm, seen = propagate_belief(b, path, lm, sensor, noise)
    without, _ = propagate_belief(b, path, [], sensor, noise)
    assert seen == {0}
    assert np.trace(with_lm.cov[:4, :4]) < np.trace(without.cov[:4, :4])


def test_ekf_step_matches_dense_oracle():
    b = Belief.initial((0.0, 0.0, 0.0, 0.1), [Landmark(0, (2.0, 0.5, 0.3))])
    noise = NoiseParams()
    new = (0.3, 0.1, 0.05, 0.2)
    got = update(predict(b, new, noise), 0, noise)
    mean, P = oracles.dense_ekf_step(b.mean, b.cov, new, 0, noise.q_per_m, noise.r_bearing)
    assert np.abs(got.mean - mean).max() <= 1e-9
    assert np.abs(got.cov - P).max() <= 1e-9


def test_duplicate_landmark_ids():
    with pytest.raises(ValueError):
        Belief.initial(START, [Landmark(1, (0, 0, 0)), Landmark(1, (1, 1, 1))])


def test_inactive_landmarks_are_left_out():
    b = Belief.initial(START, [Landmark(2, (1, 1, 1)), Landmark(0, (2, 2, 2), active=False), Landmark(1, (3, 3, 1))])
    assert b.landmark_ids == (1, 2)
    assert b.cov.shape == (10, 10)
    assert tuple(b.landmark(0)) == (3.0, 3.0, 1.0)


def test_reobservation_gain(room, sensor):
    c = Configuration(2.0, 2.0, 1.0, 0.0)
    fresh = OccupancyMap(ROOM_MAP.lo, ROOM_MAP.hi, ROOM_MAP.resolution)
    assert reobservation_gain(fresh, c, sensor) == 0.0
    full = OccupancyMap.ground_truth(room, (-0.2, -0.2, -0.2), (4.2, 4.2, 2.2), 0.2)
    full.count[:] = C_SAT
    assert reobservation_gain(full, c, sensor) == 0.0
    # mixed counts: two overlapping scans from different places
    m = OccupancyMap(ROOM_MAP.lo, ROOM_MAP.hi, ROOM_MAP.resolution)
    for v in (Configuration(1.013, 1.021, 0.987, 0.4), Configuration(2.93, 2.07, 1.01, 2.6)):
        m.integrate_scan(v.position, simulate_scan(sensor, v, room, 32, 24), sensor.d_max)
    q = Configuration(2.017, 1.483, 1.029, 0.9)
    st = m.states()
    vis = oracles.visible_voxels(st, m.lo, m.res, sensor, q)
    want = sum(1.0 - min(int(m.count[v]), C_SAT) / C_SAT for v in vis if st[v] != VoxelState.UNKNOWN)
    counts = {int(m.count[v]) for v in vis if st[v] != VoxelState.UNKNOWN}
    assert len(counts) > 1 and want > 0
    assert reobservation_gain(m, q, sensor) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("seed", [0, 3])
def test_corridor_with_landmarks_is_chosen(sensor, seed):
    world, omap, lms, veh, cur, target, belief = corridors()
    layer = second_layer(belief, cur, target, omap, veh, sensor, lms, NoiseParams(), 8, seed, 0)
    paths = [p for p in layer.candidates if p is not None]
    assert any(south(p) for p in paths) and any(north(p) for p in paths)
    assert south(layer.candidates[layer.chosen])
    for b, d in zip(layer.beliefs, layer.d_opt):
        if b is not None:
            assert d == pytest.approx(geometric_mean_eig(b.cov), rel=1e-9)
    best_north = min(d for p, d in zip(layer.candidates, layer.d_opt) if p is not None and north(p))
    assert layer.d_opt[layer.chosen] < best_north


def test_short_run_selection_and_spd(room, sensor, holo):
    p = ExploreParams(max_steps=6, n_nodes=30)
    log = explore_uncertainty_aware(room, START, sensor, holo, ROOM_LANDMARKS, ROOM_MAP, RhemParams(M=4), p, seed=1)
    assert len(log.layers) >= 1
    for layer in log.layers:
        if layer is None:
            continue
        recheck = [geometric_mean_eig(b.cov) if b is not None else math.inf for b in layer.beliefs]
        chosen = recheck[layer.chosen]
        assert all(chosen <= r * (1 + 1e-9) for r in recheck)
        for b in layer.beliefs:
            if b is not None:
                assert np.linalg.eigvalsh(b.cov).min() > 1e-12
    for b in log.beliefs:
        assert np.allclose(b.cov, b.cov.T)
        assert np.linalg.eigvalsh(b.cov).min() > 1e-12
    kf = log.known_fractions
    assert all(y >= x for x, y in zip(kf, kf[1:]))


def test_reduces_to_nbv(room, sensor, holo):
    p = ExploreParams(max_steps=10, n_nodes=30)
    nbv = explore(room, START, sensor, holo, ROOM_MAP, p, seed=4)
    rh = explore_uncertainty_aware(room, START, sensor, holo, ROOM_LANDMARKS, ROOM_MAP,
                                   RhemParams(w_reobs=0.0, M=1), p, NoiseParams.zero(), seed=4)
    assert rh.path == nbv.path
    keys = ("step", "x", "y", "z", "yaw", "gain", "known_fraction")
    assert [{k: r[k] for k in keys} for r in rh.rows] == nbv.rows
