"""Inspection and exploration path planning for aerial robots.

Modules map one-to-one onto the planners: ``sip``, ``rrtot`` and ``uc3d`` plan
coverage tours of a known structure, ``nbv`` and ``rhem`` explore unknown space,
``contact`` routes between points on a surface. ``oracles`` holds brute-force
references and ``cli`` the scenario runner.
"""

from ._accel import backend_name
from .geometry import Configuration, TriangleMesh
from .sensor import SensorModel
from .vehicle import VehicleModel

__version__ = "0.1.0"

__all__ = ["Configuration", "SensorModel", "TriangleMesh", "VehicleModel", "backend_name", "__version__"]
