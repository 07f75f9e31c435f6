import math

import numpy as np
import pytest

from arwplan import shapes
from arwplan.errors import NoCoverageWithinBudget, StartInCollision
from arwplan.geometry import TriangleMesh
from arwplan.path_search import chain_cost
from arwplan.rrtot import Forest, extract_best_tour, grow, plan_optimal_inspection
from arwplan.sensor import visible_set
from arwplan.sip import plan_inspection

from conftest import cfg

CUBE_START = (-1.0, 0.5, 0.5, 0.0)


def far_patch():
    return TriangleMesh(np.array([[(50.0, 50.0, 0.0), (50.2, 50.0, 0.0), (50.0, 50.2, 0.0)]]))


def union_visible(sensor, mesh, configs):
    out = set()
    for c in configs:
        out |= visible_set(sensor, c, mesh)
    return out


def test_zero_iterations_leaves_forest_unchanged(cube, level_sensor, holo, rng):
    f = Forest(cube, level_sensor, holo, CUBE_START)
    assert grow(f, 0, rng) == 0
    assert f.n_vertices == 1 and len(f.trees) == 1
    assert f.config(0) == cfg(*CUBE_START)


def test_start_in_collision(cube, level_sensor, holo):
    with pytest.raises(StartInCollision):
        Forest(cube, level_sensor, holo, (1.05, 0.5, 0.5, 0.0))


def test_vertex_count_bookkeeping_empty_world(level_sensor, holo):
    mesh = far_patch()
    bounds = (np.array([-5.0, -5.0, -5.0]), np.array([5.0, 5.0, 5.0]))
    f = Forest(mesh, level_sensor, holo, (0.0, 0.0, 0.0, 0.0), bounds=bounds)
    added = grow(f, 1000, np.random.default_rng(0))
    assert added == 1000
    assert f.n_vertices == 1000 + 1
    assert len(f.trees) > 1
    for g in range(f.n_vertices):
        assert f.checker.point_free(f.config(g)[:3])


def test_roots_copy_earlier_vertices(cube, level_sensor, holo):
    f = Forest(cube, level_sensor, holo, CUBE_START)
    grow(f, 400, np.random.default_rng(2))
    assert f.root_link[0] == -1
    for t in range(1, len(f.trees)):
        g = f.root_link[t]
        assert 0 <= g < f._gid[t][0]
        assert f.trees[t].configs[0] == f.config(g)


def test_coverage_bitsets_match_visible_set(cube, level_sensor, holo):
    f = Forest(cube, level_sensor, holo, CUBE_START)
    grow(f, 600, np.random.default_rng(5))
    pick = np.random.default_rng(9).choice(f.n_vertices, size=min(50, f.n_vertices), replace=False)
    for g in pick:
        assert set(np.flatnonzero(f.cover(g)).tolist()) == visible_set(level_sensor, f.config(g), cube)


def test_extract_single_vertex_one_face(sensor, holo):
    mesh = TriangleMesh(np.array([[(0.0, 0.0, 0.0), (0.2, 0.0, 0.0), (0.0, 0.2, 0.0)]]))
    start = (-0.6, 0.05, 0.6, 0.0)
    f = Forest(mesh, sensor, holo, start)
    assert f.cover(0).all()
    path = extract_best_tour(f)
    assert path is not None
    assert path.cost == 0.0
    assert path.viewpoints == [cfg(*start)]


def test_extract_empty_when_a_face_is_unseen(cube, sensor, holo):
    # the pitched-down camera never sees the cube's bottom
    f = Forest(cube, sensor, holo, CUBE_START)
    grow(f, 300, np.random.default_rng(1))
    assert not f.covers[:, 8:10].any()
    assert extract_best_tour(f) is None


def test_sealed_cavity_raises(cube, level_sensor, holo):
    inner = TriangleMesh(np.array([[(0.4, 0.4, 0.5), (0.6, 0.4, 0.5), (0.4, 0.6, 0.5)]]))
    mesh = cube.merged(inner)
    with pytest.raises(NoCoverageWithinBudget) as e:
        plan_optimal_inspection(mesh, level_sensor, holo, CUBE_START, iterations=400, checkpoint=200, seed=0)
    assert e.value.uncovered == [12]


def test_open_box_history_and_tour_checks(level_sensor, holo):
    mesh = shapes.box((0, 0, 0), (1, 1, 1), skip=("+z", "-z"))
    res = plan_optimal_inspection(mesh, level_sensor, holo, CUBE_START, iterations=3000, checkpoint=500, seed=3)
    costs = [c for _, c in res.history]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    assert math.isfinite(costs[-1])
    path = res.path
    assert union_visible(level_sensor, mesh, path.configurations) == set(range(mesh.n_faces))
    assert sum(chain_cost(holo, leg) for leg in path.legs) == pytest.approx(path.cost, abs=1e-6)
    for leg in path.legs:
        assert res.forest.checker.polyline_free(np.array([c[:3] for c in leg]))


def test_deterministic(cube, level_sensor, holo):
    a = plan_optimal_inspection(cube, level_sensor, holo, CUBE_START, iterations=1500, checkpoint=500, seed=4)
    b = plan_optimal_inspection(cube, level_sensor, holo, CUBE_START, iterations=1500, checkpoint=500, seed=4)
    assert a.history == b.history
    assert a.path.viewpoints == b.path.viewpoints


def test_cube_cost_within_band_of_sip(cube, level_sensor, holo):
    rr = plan_optimal_inspection(cube, level_sensor, holo, CUBE_START, iterations=20000, checkpoint=500, seed=0)
    sip = plan_inspection(cube, level_sensor, holo, iterations=5, seed=1)
    ratio = rr.path.cost / sip.path.cost
    assert 0.5 <= ratio <= 2.0
