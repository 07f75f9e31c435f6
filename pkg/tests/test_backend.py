import json
import os
import subprocess
import sys

from arwplan import backend_name

PROBE = """
import json, math
from arwplan import backend_name, shapes
from arwplan.cli import oracle_ekf, oracle_raycast
from arwplan.sensor import SensorModel
from arwplan.sip import plan_inspection
from arwplan.vehicle import VehicleModel

sensor = SensorModel(vfov=math.radians(90.0), pitch=0.0)
res = plan_inspection(shapes.unit_cube(), sensor, VehicleModel("holonomic", 0.25, 0.5, 0.1), iterations=2, seed=1)
print(json.dumps({"backend": backend_name(), "raycast": oracle_raycast(300), "ekf": oracle_ekf(),
                  "history": res.history}))
"""


def run(disable):
    env = dict(os.environ)
    env.pop("ARWPLAN_DISABLE_NUMBA", None)
    if disable:
        env["ARWPLAN_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_backend_name():
    assert backend_name() in ("numba", "numpy")


def test_fallback_matches_compiled():
    slow = run(True)
    fast = run(False)
    assert slow["backend"] == "numpy"
    assert slow["raycast"] == 0 and fast["raycast"] == 0
    assert slow["ekf"] <= 1e-9
    assert slow["history"] == fast["history"]
