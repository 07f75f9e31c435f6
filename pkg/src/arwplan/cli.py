"""Command line: ``arwplan plan <scenario.json>`` and ``arwplan oracle <check>``.

Every ``plan`` run writes ``report.json`` to the output directory, also on
failure, plus mode-specific files. Wall-clock time goes to ``timing.json`` so
that all other files are byte-identical across reruns of the same scenario.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import MissingFile, PlanningError, SchemaError

OUT_ENV = "ARWPLAN_OUT_DIR"
DEFAULT_OUT = "arwplan_out"
PATH_HEADER = ["t_est_s", "x_m", "y_m", "z_m", "yaw_rad"]

EXIT_OK = 0
EXIT_PLANNING = 1
EXIT_INPUT = 2

log = logging.getLogger("arwplan")


# -- output helpers ---------------------------------------------------------------

def _fmt(v):
    return f"{v:.6f}"


def write_path_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATH_HEADER)
        for r in rows:
            w.writerow([_fmt(float(v)) for v in r[:5]])


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return round(v, 9) if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def timed_rows(vehicle, configs):
    """(t, x, y, z, yaw) along local paths joining ``configs`` in order."""
    from .vehicle import connect

    configs = list(configs)
    rows = [(0.0, *configs[0])]
    t = 0.0
    for a, b in zip(configs[:-1], configs[1:]):
        lp = connect(vehicle, a, b)
        n = len(lp.waypoints) - 1
        for i in range(1, n + 1):
            rows.append((t + lp.cost * i / n, *lp.waypoints[i]))
        t += lp.cost
    return rows


class _Collect(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(f"{record.name}: {record.getMessage()}")


# -- mode runners -----------------------------------------------------------------

def _meshes(sc):
    from .mesh_io import load_mesh

    structure = load_mesh(sc.structure_mesh) if sc.structure_mesh else None
    world = load_mesh(sc.world_mesh) if sc.world_mesh else None
    return structure, world


def _inspection_outputs(out, sc, vehicle, path, history):
    write_path_csv(out / "path.csv", path.samples(vehicle))
    write_csv(out / "viewpoints.csv", ["index", "x_m", "y_m", "z_m", "yaw_rad"],
              [(i, *map(float, v)) for i, v in enumerate(path.viewpoints)])
    write_csv(out / "cost_history.csv", ["iteration", "best_cost_s"],
              [(int(i), float(c)) for i, c in history])
    return {"total_cost_s": path.cost, "coverage_fraction": path.coverage_fraction(),
            "faces_total": path.faces_total, "faces_covered": len(path.covered),
            "faces_excluded": list(path.excluded), "n_viewpoints": len(path.viewpoints)}


def run_sip(sc, out):
    from .path_search import Budget
    from .sip import plan_inspection

    mesh, world = _meshes(sc)
    vehicle = sc.vehicle.build()
    res = plan_inspection(mesh, sc.sensor.build(), vehicle, world, sc.sip.iterations, sc.seed,
                          sc.sip.n_samples, Budget(sc.sip.leg_iterations), sc.sip.restarts)
    return _inspection_outputs(out, sc, vehicle, res.path, list(enumerate(res.history)))


def run_rrtot(sc, out):
    from .geometry import Configuration
    from .rrtot import plan_optimal_inspection

    mesh, world = _meshes(sc)
    vehicle = sc.vehicle.build()
    res = plan_optimal_inspection(mesh, sc.sensor.build(), vehicle, Configuration(*sc.start),
                                  sc.rrtot.iterations, sc.rrtot.checkpoint, sc.seed, world,
                                  p_new=sc.rrtot.p_new)
    m = _inspection_outputs(out, sc, vehicle, res.path, res.history)
    m["forest_vertices"] = res.forest.n_vertices
    return m


def run_uc3d(sc, out):
    from .uc3d import UniformityParams, plan_uniform_inspection

    mesh, world = _meshes(sc)
    sensor, vehicle = sc.sensor.build(), sc.vehicle.build()
    kw = {"eps_d": sc.uc3d.eps_d, "eps_theta": math.radians(sc.uc3d.eps_theta_deg),
          "target_faces": sc.uc3d.target_faces}
    if sc.uc3d.d_target is not None:
        kw["d_target"] = sc.uc3d.d_target
    params = UniformityParams.for_sensor(sensor, **kw)
    res = plan_uniform_inspection(mesh, params, sensor, vehicle, sc.uc3d.max_restarts, sc.seed, world)
    m = _inspection_outputs(out, sc, vehicle, res.path, [(0, res.path.cost)])
    write_csv(out / "audit.csv", ["face", "distance_m", "angle_deg"],
              [(int(f), float(d), float(math.degrees(a))) for f, d, a in res.audit])
    dists = [d for _, d, _ in res.audit]
    m.update(restarts_used=res.restarts_used, mesh_faces=res.mesh.n_faces,
             distance_spread_m=max(dists) - min(dists),
             max_angle_deg=max(math.degrees(a) for _, _, a in res.audit))
    return m


def _explore_params(sc):
    from .nbv import ExploreParams, MapParams

    b = sc.nbv
    return (MapParams(tuple(sc.map.lo), tuple(sc.map.hi), sc.map.resolution),
            ExploreParams(b.g_min, b.max_steps, b.n_nodes, b.max_edge, b.lam, b.rays_h, b.rays_v))


def _exploration_outputs(out, vehicle, result, columns):
    rows = timed_rows(vehicle, result.path)
    write_path_csv(out / "path.csv", rows)
    write_csv(out / "log.csv", columns, [[r.get(c, math.nan) for c in columns] for r in result.rows])
    result.map.export_ply(out / "map.ply")
    fr = result.known_fractions
    return {"total_cost_s": rows[-1][0], "known_fraction": fr[-1] if fr else 0.0,
            "steps": len(result.rows), "status": result.status}


NBV_COLUMNS = ["step", "x", "y", "z", "yaw", "gain", "known_fraction"]
RHEM_COLUMNS = NBV_COLUMNS + ["d_opt_chosen", "d_opt_best_alternative", "n_landmarks_visible"]


def run_nbv(sc, out):
    from .nbv import explore

    _, world = _meshes(sc)
    vehicle = sc.vehicle.build()
    mp, ep = _explore_params(sc)
    res = explore(world, sc.start, sc.sensor.build(), vehicle, mp, ep, sc.seed)
    return _exploration_outputs(out, vehicle, res, NBV_COLUMNS)


def run_rhem(sc, out):
    from .rhem import Landmark, NoiseParams, RhemParams, d_optimality, explore_uncertainty_aware

    _, world = _meshes(sc)
    vehicle = sc.vehicle.build()
    mp, ep = _explore_params(sc)
    b = sc.rhem
    lms = [Landmark(lm.id, tuple(lm.position), lm.active) for lm in b.landmarks]
    noise = NoiseParams(tuple(b.noise.q_per_m), math.radians(b.noise.r_bearing_deg) ** 2)
    res = explore_uncertainty_aware(world, sc.start, sc.sensor.build(), vehicle, lms, mp,
                                    RhemParams(b.w_explore, b.w_reobs, b.M), ep, noise, sc.seed)
    m = _exploration_outputs(out, vehicle, res, RHEM_COLUMNS)
    m["final_d_opt"] = d_optimality(res.beliefs[-1].cov)
    return m


def run_contact(sc, out):
    from .contact import SurfaceTask, plan_contact_tour

    c = sc.contact
    try:
        task = SurfaceTask(c.origin, c.normal, c.pois, c.obstacles, c.clearance, c.v_contact, c.v_flight)
    except ValueError as e:
        raise SchemaError("contact", str(e)) from None
    if c.start >= len(task.pois):
        raise SchemaError("contact.start", f"index {c.start} out of range for {len(task.pois)} points")
    tour = plan_contact_tour(task, c.start, seed=sc.seed)
    n = np.asarray(task.normal)
    yaw = math.atan2(-n[1], -n[0]) if abs(n[2]) < 0.9 else 0.0
    wp, rows, t = [], [], 0.0
    for k, leg in enumerate(tour.legs):
        speed = task.v_contact if leg.mode == "InContact" else task.v_flight
        pts = leg.polyline
        for i, p in enumerate(pts):
            if i:
                t += float(np.linalg.norm(pts[i] - pts[i - 1])) / speed
            if i or k == 0:
                rows.append((t, *p, yaw))
            wp.append((k, leg.mode, *map(float, p)))
    if not tour.legs:
        p = task.to_3d([task.pois[c.start]])[0]
        rows.append((0.0, *p, yaw))
    write_path_csv(out / "path.csv", rows)
    write_csv(out / "contact_waypoints.csv", ["leg", "mode", "x_m", "y_m", "z_m"], wp)
    return {"total_cost_s": tour.cost, "order": tour.order,
            "modes": [leg.mode for leg in tour.legs], "coverage_fraction": 1.0}


RUNNERS = {"sip": run_sip, "rrtot": run_rrtot, "uc3d": run_uc3d, "nbv": run_nbv, "rhem": run_rhem,
           "contact": run_contact}


def output_dir(cli_out, scenario_out):
    if cli_out:
        return Path(cli_out)
    if scenario_out:
        return Path(scenario_out)
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def plan(scenario_path, out=None, seed=None, quiet=False):
    """Run one scenario; returns the exit code. ``report.json`` is always written."""
    from .scenario import load_scenario

    report = {"mode": None, "scenario": str(Path(scenario_path).resolve()), "error": None, "warnings": []}
    sc = None
    try:
        sc = load_scenario(scenario_path)
        if seed is not None:
            sc = sc.model_copy(update={"seed": int(seed)})
        report.update(mode=sc.mode, seed=sc.seed)
    except (SchemaError, MissingFile) as e:
        report["error"] = e.to_dict()
    dest = output_dir(out, sc.output_dir if sc else None)
    dest.mkdir(parents=True, exist_ok=True)
    if report["error"] is not None:
        write_json(dest / "report.json", report)
        write_json(dest / "error.json", report["error"])
        if not quiet:
            print(f"error: {report['error']['message']}", file=sys.stderr)
        return EXIT_INPUT

    sc_out = dest / "scenario.resolved.json"
    sc_out.write_text(sc.to_json())
    handler = _Collect()
    root = logging.getLogger("arwplan")
    root.addHandler(handler)
    code = EXIT_OK
    t0 = time.perf_counter()
    try:
        report["metrics"] = RUNNERS[sc.mode](sc, dest)
    except SchemaError as e:
        report["error"] = e.to_dict()
        code = EXIT_INPUT
    except PlanningError as e:
        report["error"] = e.to_dict()
        code = EXIT_PLANNING
    finally:
        root.removeHandler(handler)
    elapsed = time.perf_counter() - t0
    report["warnings"] = handler.messages
    write_json(dest / "report.json", report)
    if report["error"] is not None:
        write_json(dest / "error.json", report["error"])
    write_json(dest / "timing.json", {"planning_wall_clock_s": elapsed})
    if not quiet:
        if report["error"] is not None:
            e = report["error"]
            print(f"error [{e['module']}] {e['type']}: {e['message']}", file=sys.stderr)
        else:
            m = report["metrics"]
            frac = m.get("coverage_fraction", m.get("known_fraction"))
            print(f"{sc.mode}: cost {m['total_cost_s']:.3f} s, fraction {frac:.4f}, "
                  f"{elapsed:.1f} s wall clock -> {dest}")
    return code


# -- oracle checks --------------------------------------------------------------

def oracle_raycast(queries=2000, seed=0):
    """BVH ray casts and visible sets against the exhaustive oracle; returns mismatch count."""
    from . import oracles, shapes
    from .geometry import Configuration, ray_cast_many
    from .sensor import SensorModel, visible_set

    meshes = [shapes.unit_cube(), shapes.cylinder(), shapes.icosphere(2),
              shapes.combine(shapes.box((0, 0, 0), (1, 1, 1)), shapes.box((1.5, 0, 0), (2, 1, 2)))]
    rng = np.random.default_rng(seed)
    bad = 0
    for q in range(queries):
        mesh = meshes[q % len(meshes)]
        lo, hi = mesh.bounds
        p = rng.uniform(lo - 2.0, hi + 2.0)
        cfg = Configuration(*map(float, p), float(rng.uniform(-math.pi, math.pi)))
        sensor = SensorModel(pitch=float(rng.uniform(-0.6, 0.6)))
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        t1, f1 = ray_cast_many(mesh, p[None], d[None])
        t2, f2 = oracles.exhaustive_ray_cast(mesh.vertices, p[None], d[None], math.inf)
        if f1[0] != f2[0] or (f1[0] >= 0 and t1[0] != t2[0]):
            bad += 1
        if visible_set(sensor, cfg, mesh) != oracles.exhaustive_visible_set(sensor, cfg, mesh):
            bad += 1
    return bad


def oracle_tsp(seeds=10, n=8):
    from .oracles import random_symmetric_matrix
    from .tour import brute_force_tour, solve_tour

    worst = 0.0
    for s in range(seeds):
        M = random_symmetric_matrix(n, s)
        worst = max(worst, solve_tour(M, closed=True, restarts=5, seed=s).cost - brute_force_tour(M).cost)
    return worst


def oracle_ekf():
    from .oracles import dense_ekf_step
    from .rhem import Belief, Landmark, NoiseParams, predict, update

    b = Belief.initial((0.0, 0.0, 0.0, 0.1), [Landmark(0, (2.0, 0.5, 0.3))])
    noise = NoiseParams()
    new = (0.3, 0.1, 0.05, 0.2)
    got = update(predict(b, new, noise), 0, noise)
    _, P = dense_ekf_step(b.mean, b.cov, new, 0, noise.q_per_m, noise.r_bearing)
    return float(np.abs(got.cov - P).max())


def oracle_contact_grid():
    from .contact import SurfaceTask, contact_length
    from .oracles import grid_shortest_path

    task = SurfaceTask((0, 0, 0), (1, 0, 0), [(0.0, 0.0), (2.0, 0.0)],
                       [[(0.8, -0.4), (1.2, -0.4), (1.2, 0.4), (0.8, 0.4)]])
    vg, _ = contact_length(task, (0.0, 0.0), (2.0, 0.0))
    grid = grid_shortest_path((0.0, 0.0), (2.0, 0.0), task.polygons)
    return abs(vg - grid) / grid


ORACLES = {
    "raycast": (oracle_raycast, lambda v: v == 0, "mismatches"),
    "tsp": (oracle_tsp, lambda v: v <= 1e-9, "max heuristic - exact"),
    "ekf": (oracle_ekf, lambda v: v <= 1e-9, "max |dP|"),
    "contact-grid": (oracle_contact_grid, lambda v: v <= 0.02, "relative gap"),
}


def oracle(name):
    names = list(ORACLES) if name == "all" else [name]
    ok_all = True
    for n in names:
        fn, ok, label = ORACLES[n]
        v = fn()
        ok_all &= bool(ok(v))
        print(f"{n}: {'PASS' if ok(v) else 'FAIL'} ({label} = {v:.3g})")
    return EXIT_OK if ok_all else EXIT_PLANNING


def main(argv=None):
    ap = argparse.ArgumentParser(prog="arwplan", description="Inspection and exploration planners")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("plan", help="run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", help=f"output directory (default: scenario output_dir, ${OUT_ENV}, ./{DEFAULT_OUT})")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--quiet", action="store_true", help="no summary line, warnings only in report.json")
    o = sub.add_parser("oracle", help="run a brute-force cross-check")
    o.add_argument("check", choices=sorted(ORACLES) + ["all"])
    s = sub.add_parser("schema", help="print the scenario JSON schema")
    s.add_argument("--write", action="store_true", help="rewrite the schema file shipped with the package")
    args = ap.parse_args(argv)

    logging.basicConfig(level=logging.ERROR if getattr(args, "quiet", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.cmd == "plan":
        return plan(args.scenario, args.out, args.seed, args.quiet)
    if args.cmd == "oracle":
        return oracle(args.check)
    from .scenario import SCHEMA_FILE, json_schema, write_schema

    if args.write:
        write_schema()
        print(SCHEMA_FILE)
    else:
        print(json.dumps(json_schema(), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
