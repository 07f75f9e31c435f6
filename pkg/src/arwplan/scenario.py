"""Scenario files: strict JSON schema, defaults and conversion to planner objects.

Relative file paths resolve against the scenario file's directory and are
stored absolute, so a loaded scenario serializes to a self-contained file.
"""

import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import MissingFile, SchemaError

MODES = ("sip", "rrtot", "uc3d", "nbv", "rhem", "contact")
SCHEMA_FILE = Path(__file__).with_name("scenario.schema.json")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SensorBlock(_Strict):
    hfov_deg: float = Field(90.0, gt=0, lt=180)
    vfov_deg: float = Field(60.0, gt=0, lt=180)
    d_min: float = Field(0.35, ge=0)
    d_max: float = Field(5.0, gt=0)
    max_incidence_deg: float = Field(72.0, gt=0, le=90)
    pitch_deg: float = Field(-15.0, ge=-90, le=90)

    @model_validator(mode="after")
    def _range(self):
        if self.d_min >= self.d_max:
            raise ValueError("d_min must be below d_max")
        return self

    def build(self):
        from .sensor import SensorModel

        return SensorModel(math.radians(self.hfov_deg), math.radians(self.vfov_deg), self.d_min, self.d_max,
                           math.radians(self.max_incidence_deg), math.radians(self.pitch_deg))


class VehicleBlock(_Strict):
    kind: Literal["holonomic", "nonholonomic"] = "holonomic"
    v_max: float = Field(0.25, gt=0)
    yaw_rate: float = Field(0.5, gt=0)
    clearance: float = Field(0.1, ge=0)

    def build(self):
        from .vehicle import VehicleModel

        return VehicleModel(self.kind, self.v_max, self.yaw_rate, self.clearance)


class MapBlock(_Strict):
    lo: Tuple[float, float, float]
    hi: Tuple[float, float, float]
    resolution: float = Field(0.2, gt=0, le=5)

    @model_validator(mode="after")
    def _extent(self):
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("hi must exceed lo on every axis")
        return self


class SipBlock(_Strict):
    iterations: int = Field(10, ge=1, le=1000)
    n_samples: int = Field(60, ge=1)
    restarts: int = Field(5, ge=1)
    leg_iterations: int = Field(400, ge=1)


class RrtotBlock(_Strict):
    iterations: int = Field(20000, ge=0)
    checkpoint: int = Field(500, ge=1)
    p_new: float = Field(0.1, ge=0, le=1)


class Uc3dBlock(_Strict):
    d_target: Optional[float] = Field(None, gt=0)
    eps_d: float = Field(0.1, gt=0)
    eps_theta_deg: float = Field(20.0, gt=0, lt=90)
    target_faces: int = Field(0, ge=0)
    max_restarts: int = Field(20, ge=1)


class NbvBlock(_Strict):
    g_min: float = Field(0.05, ge=0)
    max_steps: int = Field(200, ge=1)
    n_nodes: int = Field(60, ge=1)
    max_edge: float = Field(1.0, gt=0)
    lam: float = Field(0.25, ge=0)
    rays_h: int = Field(32, ge=2)
    rays_v: int = Field(24, ge=2)


class LandmarkBlock(_Strict):
    id: int
    position: Tuple[float, float, float]
    active: bool = True


class NoiseBlock(_Strict):
    q_per_m: Tuple[float, float, float, float] = (1e-4, 1e-4, 1e-4, math.radians(0.5) ** 2)
    r_bearing_deg: float = Field(1.0, ge=0)


class RhemBlock(_Strict):
    w_explore: float = Field(1.0, ge=0)
    w_reobs: float = Field(0.001, ge=0)
    M: int = Field(4, ge=1, le=64)
    noise: NoiseBlock = NoiseBlock()
    landmarks: List[LandmarkBlock] = []

    @model_validator(mode="after")
    def _ids(self):
        ids = [lm.id for lm in self.landmarks]
        if len(set(ids)) != len(ids):
            raise ValueError("landmark ids must be unique")
        return self


class ContactBlock(_Strict):
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    normal: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    pois: List[Tuple[float, float]]
    obstacles: List[List[Tuple[float, float]]] = []
    clearance: float = Field(0.3, ge=0)
    v_contact: float = Field(0.1, gt=0)
    v_flight: float = Field(0.5, gt=0)
    start: int = Field(0, ge=0)


class Scenario(_Strict):
    mode: Literal["sip", "rrtot", "uc3d", "nbv", "rhem", "contact"]
    seed: int = Field(ge=0)
    world_mesh: Optional[str] = None
    structure_mesh: Optional[str] = None
    output_dir: Optional[str] = None
    start: Optional[Tuple[float, float, float, float]] = None
    sensor: SensorBlock = SensorBlock()
    vehicle: VehicleBlock = VehicleBlock()
    map: Optional[MapBlock] = None
    sip: SipBlock = SipBlock()
    rrtot: RrtotBlock = RrtotBlock()
    uc3d: Uc3dBlock = Uc3dBlock()
    nbv: NbvBlock = NbvBlock()
    rhem: RhemBlock = RhemBlock()
    contact: Optional[ContactBlock] = None

    @model_validator(mode="after")
    def _mode_inputs(self):
        if self.mode in ("sip", "rrtot", "uc3d") and not self.structure_mesh:
            raise ValueError(f"mode {self.mode} needs structure_mesh")
        if self.mode in ("nbv", "rhem"):
            for key in ("world_mesh", "map", "start"):
                if getattr(self, key) is None:
                    raise ValueError(f"mode {self.mode} needs {key}")
        if self.mode == "rrtot" and self.start is None:
            raise ValueError("mode rrtot needs start")
        if self.mode == "contact" and self.contact is None:
            raise ValueError("mode contact needs a contact block")
        return self

    def dump(self):
        return self.model_dump(mode="json")

    def to_json(self):
        return json.dumps(self.dump(), indent=2, sort_keys=True) + "\n"


def _key_path(loc):
    return ".".join(str(p) for p in loc) or "<root>"


def parse_scenario(data, base_dir="."):
    """Validate a decoded JSON object; raises SchemaError or MissingFile."""
    try:
        sc = Scenario.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = err.get("loc", ())
        reason = err.get("msg", "invalid")
        if err.get("type") == "extra_forbidden":
            reason = f"unknown key {loc[-1]!r}"
        raise SchemaError(_key_path(loc), reason) from None
    base = Path(base_dir)
    updates = {}
    for key in ("world_mesh", "structure_mesh"):
        val = getattr(sc, key)
        if val is None:
            continue
        p = Path(val)
        if not p.is_absolute():
            p = (base / p).resolve()
        if not p.is_file():
            raise MissingFile(f"{key}: file not found: {p}")
        updates[key] = str(p)
    if sc.output_dir is not None and not Path(sc.output_dir).is_absolute():
        updates["output_dir"] = str((base / sc.output_dir).resolve())
    return sc.model_copy(update=updates)


def load_scenario(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError("<root>", f"malformed JSON: {e.msg} at line {e.lineno}") from None
    if not isinstance(data, dict):
        raise SchemaError("<root>", "scenario must be a JSON object")
    return parse_scenario(data, path.parent)


def json_schema():
    return Scenario.model_json_schema()


def write_schema(path=SCHEMA_FILE):
    Path(path).write_text(json.dumps(json_schema(), indent=2, sort_keys=True) + "\n")
