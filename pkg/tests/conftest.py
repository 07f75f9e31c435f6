import math

import numpy as np
import pytest

from arwplan import shapes
from arwplan.geometry import Configuration
from arwplan.sensor import SensorModel
from arwplan.vehicle import VehicleModel


@pytest.fixture
def cube():
    return shapes.unit_cube()


@pytest.fixture
def room():
    return shapes.box((0, 0, 0), (4, 4, 2), inward=True, name="room")


@pytest.fixture
def sensor():
    return SensorModel()


@pytest.fixture
def level_sensor():
    """Level camera with a tall field of view, so bottom faces are reachable."""
    return SensorModel(vfov=math.radians(90.0), pitch=0.0)


@pytest.fixture
def holo():
    return VehicleModel("holonomic", 0.25, 0.5, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def cfg(x, y, z, yaw=0.0):
    return Configuration(float(x), float(y), float(z), float(yaw))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
