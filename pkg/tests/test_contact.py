import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point

from arwplan import oracles
from arwplan.contact import (IN_CONTACT, UNDOCK_REDOCK, SurfaceTask, all_legs, contact_length, leg_cost,
                             plan_contact_tour)
from arwplan.tour import brute_force_tour

SQUARE = [(0.8, -0.4), (1.2, -0.4), (1.2, 0.4), (0.8, 0.4)]


def task(pois, obstacles=(), v_flight=0.5):
    return SurfaceTask((0, 0, 0), (1, 0, 0), pois, list(obstacles), 0.3, 0.1, v_flight)


def test_fly_is_cheaper():
    cost, mode = leg_cost(task([(0, 0), (2, 0)]), (0, 0), (2, 0))
    assert mode == UNDOCK_REDOCK and cost == pytest.approx(5.2)


def test_contact_is_cheaper():
    cost, mode = leg_cost(task([(0, 0), (2, 0)], v_flight=0.05), (0, 0), (2, 0))
    assert mode == IN_CONTACT and cost == pytest.approx(20.0)


def test_detour_matches_grid():
    t = task([(0.03, 0.07), (2.01, -0.05)], [SQUARE])
    vg, route = contact_length(t, (0.03, 0.07), (2.01, -0.05))
    grid = oracles.grid_shortest_path((0.03, 0.07), (2.01, -0.05), t.polygons)
    assert abs(vg - grid) / grid <= 0.02
    assert vg > math.dist((0.03, 0.07), (2.01, -0.05))
    assert len(route) == 4


def test_single_poi():
    tour = plan_contact_tour(task([(0, 0)]))
    assert tour.legs == [] and tour.cost == 0.0


def test_collinear_sweep():
    t = task([(0, 0), (0.3, 0), (0.6, 0), (0.9, 0)], v_flight=0.01)
    tour = plan_contact_tour(t)
    assert tour.order == [0, 1, 2, 3]
    assert all(leg.mode == IN_CONTACT for leg in tour.legs)


def test_random_instance_exact():
    rng = np.random.default_rng(7)
    obstacles = [[(1.0, 1.0), (1.6, 1.0), (1.6, 1.8), (1.0, 1.8)], [(2.2, 0.2), (2.8, 0.4), (2.4, 0.9)]]
    t0 = task([(0, 0)], obstacles)
    pois = []
    while len(pois) < 7:
        p = tuple(rng.uniform(0, 3.2, 2))
        if not any(poly.buffer(0.05).contains(Point(p)) for poly in t0.polygons):
            pois.append(p)
    t = task(pois, obstacles, v_flight=0.12)
    tour = plan_contact_tour(t, start=0)
    exact = brute_force_tour(tour.matrix, closed=False, start=0)
    assert tour.cost == pytest.approx(exact.cost, abs=1e-9)
    assert sorted(tour.order) == list(range(7))
    assert tour.cost == pytest.approx(sum(leg.cost for leg in tour.legs), abs=1e-9)
    for leg in tour.legs:
        if leg.mode == IN_CONTACT:
            line = LineString(leg.polyline[:, 1:])  # wall x = 0: (y, z) are the surface axes
            assert not any(line.relate_pattern(poly, "T********") for poly in t.polygons)


def test_legs_are_symmetric():
    t = task([(0, 0), (2, 0.1), (1, 1)], [SQUARE], v_flight=0.2)
    legs = all_legs(t)
    for (i, j), leg in legs.items():
        assert leg.cost == pytest.approx(legs[(j, i)].cost)


def test_polyline_endpoints_on_surface():
    t = task([(0, 0), (2, 0)], [SQUARE], v_flight=0.5)
    leg = all_legs(t)[(0, 1)]
    np.testing.assert_allclose(leg.polyline[0], t.to_3d([(0, 0)])[0])
    np.testing.assert_allclose(leg.polyline[-1], t.to_3d([(2, 0)])[0])
    if leg.mode == UNDOCK_REDOCK:
        np.testing.assert_allclose(leg.polyline[1:3, 0], 0.3)


def test_invalid_task():
    with pytest.raises(ValueError):
        task([(1.0, 0.0)], [SQUARE])
    with pytest.raises(ValueError):
        SurfaceTask((0, 0, 0), (0, 0, 0), [(0, 0)])
