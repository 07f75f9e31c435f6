"""Regenerate the procedural meshes the scenario files refer to."""

from pathlib import Path

from arwplan import shapes
from arwplan.mesh_io import save_mesh

HERE = Path(__file__).parent / "meshes"


def main():
    HERE.mkdir(exist_ok=True)
    save_mesh(shapes.unit_cube(), HERE / "cube.obj")
    save_mesh(shapes.cylinder(), HERE / "cylinder200.obj")
    save_mesh(shapes.icosphere(3), HERE / "sphere1280.obj")
    save_mesh(shapes.box((0, 0, 0), (4, 4, 2), inward=True, name="room"), HERE / "room.obj")
    corridors = shapes.combine(shapes.box((0, 0, 0), (6, 4, 2), inward=True), shapes.box((2, 1, 0), (4, 3, 2)),
                               name="corridors")
    save_mesh(corridors, HERE / "corridors.obj")


if __name__ == "__main__":
    main()
