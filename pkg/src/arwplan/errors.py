"""Exception types raised by the planners.

Every error carries the name of the module that raised it in ``module`` so the
CLI can report provenance without parsing messages.
"""


class PlanningError(Exception):
    module = "arwplan"

    def to_dict(self):
        return {"type": type(self).__name__, "module": self.module, "message": str(self)}


# geometry / mesh io
class MeshFileNotFound(PlanningError, FileNotFoundError):
    module = "geometry_core"


class MeshParseError(PlanningError, ValueError):
    module = "geometry_core"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class EmptyMeshError(PlanningError, ValueError):
    module = "geometry_core"


# occupancy map
class OriginOutOfBounds(PlanningError, ValueError):
    module = "occupancy_map"


# path search
class StartInCollision(PlanningError):
    module = "path_search"


class NoPathWithinBudget(PlanningError):
    module = "path_search"


# tour optimizer
class InfeasibleTour(PlanningError):
    module = "tour_optimizer"


class TourTooLarge(PlanningError, ValueError):
    module = "tour_optimizer"


# sip
class FaceInfeasible(PlanningError):
    module = "sip_planner"

    def __init__(self, face, message=None):
        super().__init__(message or f"no feasible viewpoint for face {face}")
        self.face = face


# rrtot
class NoCoverageWithinBudget(PlanningError):
    module = "rrtot_planner"

    def __init__(self, uncovered, message=None):
        uncovered = sorted(int(f) for f in uncovered)
        super().__init__(message or f"faces never covered by any forest vertex: {uncovered}")
        self.uncovered = uncovered


# uc3d
class TargetTooSmall(PlanningError, ValueError):
    module = "uc3d_planner"


class NoUnoccludedSample(PlanningError):
    module = "uc3d_planner"

    def __init__(self, face, message=None):
        super().__init__(message or f"every uniform-cap sample of face {face} is occluded")
        self.face = face


class NoFeasibleSolution(PlanningError):
    module = "uc3d_planner"

    def __init__(self, message, blocking_faces=(), blocking_legs=()):
        super().__init__(message)
        self.blocking_faces = list(blocking_faces)
        self.blocking_legs = list(blocking_legs)

    def to_dict(self):
        d = super().to_dict()
        d["blocking_faces"] = [int(f) for f in self.blocking_faces]
        d["blocking_legs"] = [[int(a), int(b)] for a, b in self.blocking_legs]
        return d


# exploration
class RootNotFree(PlanningError):
    module = "explorer_nbv"


class Stuck(PlanningError):
    module = "explorer_nbv"


class NoAdmissibleSecondLayerPath(PlanningError):
    module = "explorer_rhem"


class NotSPD(PlanningError, ValueError):
    module = "explorer_rhem"


# scenario
class SchemaError(PlanningError, ValueError):
    module = "sim_cli"

    def __init__(self, key_path, reason):
        super().__init__(f"{key_path}: {reason}")
        self.key_path = key_path
        self.reason = reason

    def to_dict(self):
        d = super().to_dict()
        d["key_path"] = self.key_path
        d["reason"] = self.reason
        return d


class MissingFile(PlanningError, FileNotFoundError):
    module = "sim_cli"
