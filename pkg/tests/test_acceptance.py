"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np
from shapely.geometry import LineString

from arwplan import cli, oracles
from arwplan.contact import IN_CONTACT, SurfaceTask, contact_length, crosses_obstacle, plan_contact_tour
from arwplan.mesh_io import load_mesh
from arwplan.nbv import ExploreParams, MapParams, explore
from arwplan.rhem import (Belief, Landmark, NoiseParams, RhemParams, explore_uncertainty_aware, predict,
                          second_layer, update)
from arwplan.rrtot import plan_optimal_inspection
from arwplan.scenario import load_scenario
from arwplan.sensor import SensorModel, visible_set
from arwplan.sip import plan_inspection
from arwplan.tour import brute_force_tour, solve_tour
from arwplan.uc3d import UniformityParams, plan_uniform_inspection
from arwplan.vehicle import VehicleModel

from scenes import ROOM_LANDMARKS, corridors, geometric_mean_eig, north, south

SCEN = Path(__file__).resolve().parents[1] / "scenarios"
RESULTS = []

ROOM_MAP = MapParams((-0.1, -0.1, -0.1), (4.1, 4.1, 2.1), 0.2)
ROOM_START = (2.0, 2.0, 1.0, 0.0)


def report(number, title, checks, elapsed=None, limit=None):
    """Print and record one line; ``checks`` maps a short label to a bool."""
    if limit is not None:
        checks = dict(checks, **{f"runtime {elapsed:.1f} s < {limit} s": elapsed < limit})
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = "; ".join(checks) if ok else "failed: " + "; ".join(failed)
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} ({detail})"
    print(line)
    RESULTS.append(line)
    assert ok, line


def union_visible(sensor, mesh, configs):
    out = set()
    for c in configs:
        out |= visible_set(sensor, c, mesh)
    return out


def nonincreasing(xs):
    return all(b <= a for a, b in zip(xs, xs[1:]))


def test_c01_visibility_oracle():
    t0 = time.perf_counter()
    bad = cli.oracle_raycast(queries=10_000, seed=0)
    report(1, "ray_cast and visible_set equal exhaustive evaluation on 10^4 queries",
           {f"{bad} mismatches": bad == 0}, time.perf_counter() - t0, 30)


def test_c02_tsp_exactness():
    t0 = time.perf_counter()
    gaps = []
    for seed in range(10):
        M = oracles.random_symmetric_matrix(8, seed)
        gaps.append(abs(solve_tour(M, restarts=5).cost - brute_force_tour(M).cost))
    report(2, "solve_tour equals brute force on 10 seeds, n=8",
           {f"max gap {max(gaps):.1e} <= 1e-9": max(gaps) <= 1e-9}, time.perf_counter() - t0, 5)


def test_c03_sip_cylinder():
    mesh = load_mesh(SCEN / "meshes" / "cylinder200.obj")
    sensor = SensorModel()
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    t0 = time.perf_counter()
    res = plan_inspection(mesh, sensor, veh, iterations=10, seed=1)
    elapsed = time.perf_counter() - t0
    target = set(range(mesh.n_faces)) - set(res.excluded)
    covered = union_visible(sensor, mesh, res.path.configurations)
    report(3, "SIP on the 200-face cylinder covers every non-excluded face, best cost non-increasing",
           {f"{mesh.n_faces} faces": mesh.n_faces == 200,
            f"covered {len(covered & target)}/{len(target)}": covered >= target,
            f"{len(res.history)} iterations": len(res.history) == 10,
            "history non-increasing": nonincreasing(res.history)},
           elapsed, 60)


def test_c04_rrtot_cube():
    cube = load_mesh(SCEN / "meshes" / "cube.obj")
    sensor = SensorModel(vfov=math.radians(90.0), pitch=0.0)
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    t0 = time.perf_counter()
    res = plan_optimal_inspection(cube, sensor, veh, (-1.0, 0.5, 0.5, 0.0), iterations=20_000,
                                  checkpoint=500, seed=0)
    elapsed = time.perf_counter() - t0
    costs = [c for _, c in res.history]
    finite = [c for c in costs if math.isfinite(c)]
    covered = union_visible(sensor, cube, res.path.configurations)
    report(4, "RRTOT on the 12-face cube finds a covering tour within 20k iterations and improves it",
           {f"covered {len(covered)}/12": covered == set(range(12)),
            "history non-increasing": nonincreasing(costs),
            f"improved {finite[0]:.2f} -> {finite[-1]:.2f}": len(finite) > 1 and finite[-1] < finite[0]},
           elapsed, 120)


def test_c05_uc3d_sphere():
    sphere = load_mesh(SCEN / "meshes" / "sphere1280.obj")
    sensor = SensorModel(vfov=math.radians(170.0), pitch=0.0)
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    p = UniformityParams.for_sensor(sensor, target_faces=134)
    t0 = time.perf_counter()
    res = plan_uniform_inspection(sphere, p, sensor, veh, max_restarts=20, seed=0)
    elapsed = time.perf_counter() - t0
    mesh = res.mesh
    dists, angles = [], []
    for f, c in enumerate(res.viewpoints):
        d = mesh.centroids[f] - np.asarray(c[:3])
        r = float(np.linalg.norm(d))
        dists.append(r)
        angles.append(math.acos(float(np.clip(-(d @ mesh.normals[f]) / r, -1.0, 1.0))))
    spread = max(dists) - min(dists)
    report(5, "UC3D on the sphere subsampled to 134 faces keeps every view in the distance and angle bounds",
           {f"1280 -> {mesh.n_faces} faces in [107, 161]": sphere.n_faces == 1280 and 107 <= mesh.n_faces <= 161,
            f"spread {spread:.3f} <= {2 * p.eps_d:.3f}": spread <= 2 * p.eps_d,
            f"max angle {math.degrees(max(angles)):.1f} <= 20 deg": max(angles) <= p.eps_theta,
            "one viewpoint per face": len(res.viewpoints) == mesh.n_faces},
           elapsed, 60)


def test_c06_nbv_room():
    room = load_mesh(SCEN / "meshes" / "room.obj")
    sensor = SensorModel()
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    params = ExploreParams(max_steps=200)
    t0 = time.perf_counter()
    a = explore(room, ROOM_START, sensor, veh, ROOM_MAP, params, seed=0)
    elapsed = time.perf_counter() - t0
    b = explore(room, ROOM_START, sensor, veh, ROOM_MAP, params, seed=0)
    m = a.map
    assert m.shape == (21, 21, 11)
    interior = m.count[1:20, 1:20, 1:10] > 0  # voxels strictly inside the walls
    frac = float(interior.mean())
    st = m.states()[1:20, 1:20, 1:10]
    wrong = int((st[interior] == 2).sum())  # the interior is empty, so Occupied is a misclassification
    report(6, "NBV classifies >= 95% of the sealed room interior, monotone and deterministic",
           {f"interior classified {frac:.3f} in {len(a.rows)} steps": frac >= 0.95 and len(a.rows) <= 200,
            f"{wrong} interior voxels wrongly Occupied": wrong == 0,
            "known fraction monotone": nonincreasing([-k for k in a.known_fractions]),
            "rerun identical": a.rows == b.rows and a.path == b.path},
           elapsed, 120)


def test_c07_rhem_selection():
    room = load_mesh(SCEN / "meshes" / "room.obj")
    sensor = SensorModel()
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    log = explore_uncertainty_aware(room, ROOM_START, sensor, veh, ROOM_LANDMARKS, ROOM_MAP, RhemParams(M=4),
                                    ExploreParams(max_steps=200), seed=0)
    worst_margin, min_eig, steps = math.inf, math.inf, 0
    for layer in log.layers:
        if layer is None:
            continue
        steps += 1
        recheck = [geometric_mean_eig(bl.cov) if bl is not None else math.inf for bl in layer.beliefs]
        others = [r for i, r in enumerate(recheck) if i != layer.chosen]
        if others:
            worst_margin = min(worst_margin, min(others) - recheck[layer.chosen])
        for bl in layer.beliefs:
            if bl is not None:
                min_eig = min(min_eig, float(np.linalg.eigvalsh(bl.cov).min()))
    for bl in log.beliefs:
        min_eig = min(min_eig, float(np.linalg.eigvalsh(bl.cov).min()))

    world, omap, lms, cveh, cur, target, belief = corridors()
    rich = []
    for seed in range(5):
        layer = second_layer(belief, cur, target, omap, cveh, sensor, lms, NoiseParams(), 8, seed, 0)
        paths = [p for p in layer.candidates if p is not None]
        both = any(south(p) for p in paths) and any(north(p) for p in paths)
        for bl in layer.beliefs:
            if bl is not None:
                min_eig = min(min_eig, float(np.linalg.eigvalsh(bl.cov).min()))
        rich.append(both and south(layer.candidates[layer.chosen]))
    report(7, "RHEM executes the minimal D-opt candidate, prefers the landmark corridor, keeps beliefs SPD",
           {f"{steps} steps rechecked, chosen <= alternatives": steps > 0 and worst_margin >= -1e-15,
            f"landmark corridor on {sum(rich)}/5 seeds": all(rich),
            f"min eigenvalue {min_eig:.1e} > 1e-12": min_eig > 1e-12})


def test_c08_ekf_oracle():
    b = Belief.initial((0.0, 0.0, 0.0, 0.1), [Landmark(0, (2.0, 0.5, 0.3))])
    noise = NoiseParams()
    new = (0.3, 0.1, 0.05, 0.2)
    got = update(predict(b, new, noise), 0, noise)
    mean, P = oracles.dense_ekf_step(b.mean, b.cov, new, 0, noise.q_per_m, noise.r_bearing)
    err = max(float(np.abs(got.cov - P).max()), float(np.abs(got.mean - mean).max()))
    report(8, "one predict+update step equals a dense EKF on a 1-landmark instance",
           {f"max error {err:.1e} <= 1e-9": err <= 1e-9})


def test_c09_contact_tour():
    c = load_scenario(SCEN / "wall_contact.json").contact
    task = SurfaceTask(c.origin, c.normal, c.pois, c.obstacles, c.clearance, c.v_contact, c.v_flight)
    tour = plan_contact_tour(task, start=0)
    exact = brute_force_tour(tour.matrix, closed=False, start=0)
    u, w = task.basis()
    o = np.asarray(task.origin)
    crossing = 0
    for leg in tour.legs:
        if leg.mode == IN_CONTACT:
            uv = np.column_stack([(leg.polyline - o) @ u, (leg.polyline - o) @ w])
            line = LineString(uv)
            crossing += any(line.relate_pattern(poly, "T********") for poly in task.polygons)
    gaps = []
    n = len(task.pois)
    for i in range(n):
        for j in range(i + 1, n):
            p, q = task.pois[i], task.pois[j]
            if crosses_obstacle(task, p, q):
                vg, _ = contact_length(task, p, q)
                grid = oracles.grid_shortest_path(p, q, task.polygons)
                gaps.append(abs(vg - grid) / grid)
    n_contact = sum(leg.mode == IN_CONTACT for leg in tour.legs)
    report(9, "contact tour over 7 POIs and 2 obstacles is TSP-exact, obstacle-free and grid-consistent",
           {f"{n} POIs, {len(task.polygons)} obstacles": n == 7 and len(task.polygons) == 2,
            f"cost {tour.cost:.4f} = exact {exact.cost:.4f}": abs(tour.cost - exact.cost) <= 1e-9,
            f"{crossing} of {n_contact} in-contact legs cross an obstacle": crossing == 0,
            f"max detour gap {max(gaps):.4f} over {len(gaps)} pairs <= 0.02": bool(gaps) and max(gaps) <= 0.02})


def test_c10_reduction():
    room = load_mesh(SCEN / "meshes" / "room.obj")
    sensor = SensorModel()
    veh = VehicleModel("holonomic", 0.25, 0.5, 0.1)
    params = ExploreParams(max_steps=200)
    keys = ("step", "x", "y", "z", "yaw", "gain", "known_fraction")
    checks = {}
    for seed in range(3):
        nbv = explore(room, ROOM_START, sensor, veh, ROOM_MAP, params, seed=seed)
        rh = explore_uncertainty_aware(room, ROOM_START, sensor, veh, ROOM_LANDMARKS, ROOM_MAP,
                                       RhemParams(w_reobs=0.0, M=1), params, NoiseParams.zero(), seed=seed)
        same = (rh.path == nbv.path and rh.status == nbv.status
                and [{k: r[k] for k in keys} for r in rh.rows] == nbv.rows)
        checks[f"seed {seed}: {len(nbv.rows)} steps identical"] = same
    report(10, "RHEM with w_reobs=0, M=1 and zero noise reproduces the NBV trajectory", checks)
