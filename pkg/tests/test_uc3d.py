import math

import numpy as np
import pytest
from scipy import stats

from arwplan import shapes
from arwplan.errors import NoFeasibleSolution, NoUnoccludedSample, TargetTooSmall
from arwplan.geometry import TriangleMesh
from arwplan.mesh_io import weld
from arwplan.sensor import SensorModel, face_visible, visible_set
from arwplan.uc3d import (UniformityParams, euler_characteristic, plan_uniform_inspection,
                          sample_uniform_viewpoint, subsample_mesh)
from arwplan.vehicle import VehicleModel

WIDE = SensorModel(vfov=math.radians(170.0), pitch=0.0)


def patch():
    return TriangleMesh(np.array([[(0.0, 0.0, 0.0), (0.2, 0.0, 0.0), (0.0, 0.2, 0.0)]]))


def view_geometry(mesh, f, c):
    d = mesh.centroids[f] - np.asarray(c[:3])
    dist = np.linalg.norm(d)
    return dist, math.acos(np.clip(-(d @ mesh.normals[f]) / dist, -1, 1))


def test_identity_when_target_is_face_count():
    s = shapes.icosphere(2)
    assert subsample_mesh(s, s.n_faces) is s


def test_target_too_small():
    with pytest.raises(TargetTooSmall):
        subsample_mesh(shapes.icosphere(2), 3)


def test_sphere_subsample_band_and_euler():
    s = shapes.icosphere(3)
    assert s.n_faces == 1280
    d = subsample_mesh(s, 134)
    assert 107 <= d.n_faces <= 161
    _, faces = weld(d)
    assert euler_characteristic(faces) == 2
    lo, hi = s.bounds
    cell = np.max(hi - lo)  # generous: the grid cell is far below the full extent
    dlo, dhi = d.bounds
    assert np.all(dlo >= lo - cell) and np.all(dhi <= hi + cell)


def test_free_face_sample_constraints():
    p = UniformityParams(d_target=1.0, eps_d=0.1)
    mesh = patch()
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = sample_uniform_viewpoint(mesh, 0, p, WIDE, rng)
        dist, ang = view_geometry(mesh, 0, c)
        assert 0.9 - 1e-12 <= dist <= 1.1 + 1e-12
        assert ang <= p.eps_theta + 1e-12
        assert face_visible(WIDE, c, mesh, 0)


def test_overhang_blocks_every_sample():
    mesh = patch()
    roof = shapes.box((-1.0, -1.0, 0.3), (1.2, 1.2, 0.31))
    p = UniformityParams.for_sensor(WIDE)
    with pytest.raises(NoUnoccludedSample):
        sample_uniform_viewpoint(mesh, 0, p, WIDE, np.random.default_rng(0), world=mesh.merged(roof))


def test_distance_distribution_is_uniform_over_band():
    p = UniformityParams(d_target=1.0, eps_d=0.1)
    mesh = patch()
    rng = np.random.default_rng(11)
    d = np.array([view_geometry(mesh, 0, sample_uniform_viewpoint(mesh, 0, p, WIDE, rng))[0]
                  for _ in range(1000)])
    res = stats.kstest(d, stats.uniform(loc=0.9, scale=0.2).cdf)
    assert res.pvalue > 0.01


def test_params_validation():
    with pytest.raises(ValueError):
        UniformityParams(eps_d=0.0)
    with pytest.raises(ValueError):
        UniformityParams(eps_theta=math.pi / 2)
    with pytest.raises(ValueError):
        UniformityParams(d_target=0.2).check(SensorModel())
    assert UniformityParams.for_sensor(SensorModel()).d_target == pytest.approx(0.5)


def test_convex_body_feasible_on_first_restart(holo):
    # golden run: the decimated sphere of scenarios/sphere_uc3d.json, seed 0
    sphere = shapes.icosphere(3)
    p = UniformityParams.for_sensor(WIDE, target_faces=134)
    res = plan_uniform_inspection(sphere, p, WIDE, holo, max_restarts=5, seed=0)
    assert res.restarts_used == 1
    mesh = res.mesh
    assert 107 <= mesh.n_faces <= 161
    dists, angles = [], []
    for f, c in enumerate(res.viewpoints):
        d, a = view_geometry(mesh, f, c)
        dists.append(d)
        angles.append(a)
    assert max(dists) - min(dists) <= 2 * p.eps_d + 1e-12
    assert max(angles) <= p.eps_theta + 1e-12
    assert [r[1] for r in res.audit] == pytest.approx(dists, abs=1e-12)
    seen = set()
    for c in res.path.configurations:
        seen |= visible_set(WIDE, c, mesh)
    assert seen == set(range(mesh.n_faces))


def test_close_viewpoints_on_cube_need_restarts(holo):
    # viewpoints 0.4 to 0.6 m from a unit cube often cannot all be joined by
    # straight collision-free legs; the planner redraws until they can
    cube = shapes.unit_cube()
    p = UniformityParams.for_sensor(WIDE)
    res = plan_uniform_inspection(cube, p, WIDE, holo, max_restarts=20, seed=0)
    assert res.restarts_used > 1
    with pytest.raises(NoFeasibleSolution) as e:
        plan_uniform_inspection(cube, p, WIDE, holo, max_restarts=res.restarts_used - 1, seed=0)
    assert e.value.blocking_legs


def test_wide_turns_in_tight_room_are_infeasible():
    cube = shapes.unit_cube()
    room = shapes.box((-1.0, -1.0, -1.0), (2.0, 2.0, 2.0), inward=True)
    car = VehicleModel("nonholonomic", 1.0, 0.2, 0.1)  # 5 m turn radius
    p = UniformityParams.for_sensor(WIDE)
    with pytest.raises(NoFeasibleSolution) as e:
        plan_uniform_inspection(cube, p, WIDE, car, max_restarts=2, seed=0, obstacles=room)
    assert e.value.blocking_legs
    assert e.value.to_dict()["blocking_legs"]
