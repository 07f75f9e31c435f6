"""Time the hot kernels with numba against the pure-numpy fallback.

The backend is fixed at import time, so the fallback runs in a child process
with ARWPLAN_DISABLE_NUMBA=1. Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()  # warm-up, includes jit compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def measure(repeat):
    from arwplan import shapes
    from arwplan._accel import backend_name
    from arwplan.geometry import Configuration, ray_cast_many
    from arwplan.occupancy import MapCollision, OccupancyMap
    from arwplan.sensor import SensorModel, simulate_scan, visible_set
    from arwplan.tour import solve_tour

    rng = np.random.default_rng(0)
    sphere = shapes.icosphere(3)
    origins = rng.uniform(-3, 3, (5000, 3))
    dirs = rng.normal(size=(5000, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    room = shapes.box((0, 0, 0), (4, 4, 2), inward=True)
    sensor = SensorModel()
    cfg = Configuration(2.0, 2.0, 1.0, 0.3)
    scan = simulate_scan(sensor, cfg, room, 32, 24)

    def integrate():
        m = OccupancyMap((-0.1, -0.1, -0.1), (4.1, 4.1, 2.1), 0.2)
        m.integrate_scan(cfg.position, scan, sensor.d_max)

    omap = OccupancyMap.ground_truth(room, (-0.2, -0.2, -0.2), (4.2, 4.2, 2.2), 0.2)
    checker = MapCollision(omap, 0.1)
    a = rng.uniform(0.5, 3.5, (300, 3))
    b = rng.uniform(0.5, 3.5, (300, 3))
    a[:, 2] = b[:, 2] = 1.0

    pts = rng.uniform(0, 10, (40, 2))
    M = np.linalg.norm(pts[:, None] - pts[None], axis=2)

    cases = {
        "ray_cast 5000 rays x 1280 faces": lambda: ray_cast_many(sphere, origins, dirs),
        "visible_set 1280 faces": lambda: visible_set(sensor, Configuration(0.0, -2.5, 0.5, 1.5708), sphere),
        "integrate_scan 768 rays": integrate,
        "segments_free 300 capsules": lambda: checker.segments_free(a, b),
        "solve_tour n=40": lambda: solve_tour(M, restarts=5, seed=0),
    }
    return backend_name(), {k: _best(fn, repeat) for k, fn in cases.items()}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(measure(args.repeat)))
        return
    fast_name, fast = measure(args.repeat)
    env = dict(os.environ, ARWPLAN_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                         env=env, capture_output=True, text=True, check=True)
    slow_name, slow = json.loads(out.stdout.strip().splitlines()[-1])
    width = max(len(k) for k in fast)
    print(f"{'kernel':<{width}}  {fast_name:>10}  {slow_name:>10}  speedup")
    for k in fast:
        print(f"{k:<{width}}  {fast[k] * 1e3:8.2f}ms  {slow[k] * 1e3:8.2f}ms  {slow[k] / fast[k]:6.1f}x")


if __name__ == "__main__":
    main()
