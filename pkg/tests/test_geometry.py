import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arwplan import oracles, shapes
from arwplan.errors import EmptyMeshError, MeshFileNotFound, MeshParseError
from arwplan.geometry import Ray, TriangleMesh, ray_cast, ray_cast_many, segment_collides, segment_triangle_distance
from arwplan.mesh_io import load_mesh, save_mesh, save_stl


def test_ascii_stl_single_triangle(tmp_path):
    p = tmp_path / "tri.stl"
    p.write_text("solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n"
                 "   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n")
    m = load_mesh(p)
    assert m.n_faces == 1
    np.testing.assert_allclose(m.normals[0], [0, 0, 1])


def test_zero_area_face_dropped(tmp_path):
    tris = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]],
                     [[0, 0, 0], [1, 0, 0], [2, 0, 0]],
                     [[0, 0, 1], [1, 0, 1], [0, 1, 1]]], dtype=float)
    rec = np.zeros(3, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("a", "<u2")])
    rec["v"] = tris
    p = tmp_path / "deg.stl"
    p.write_bytes(b"\0" * 80 + np.uint32(3).tobytes() + rec.tobytes())
    m = load_mesh(p)
    assert m.n_faces == 2
    assert m.dropped_faces == 1


def test_cube_obj_area(tmp_path, cube):
    p = tmp_path / "cube.obj"
    save_mesh(cube, p)
    m = load_mesh(p)
    assert m.n_faces == 12
    assert m.total_area == pytest.approx(6.0)


@pytest.mark.parametrize("ext", [".obj", ".stl"])
def test_round_trip(tmp_path, ext):
    m = shapes.icosphere(1)
    p = tmp_path / f"s{ext}"
    save_mesh(m, p)
    back = load_mesh(p)
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-6)


def test_ascii_stl_writer(tmp_path, cube):
    p = tmp_path / "c.stl"
    save_stl(cube, p, binary=False)
    np.testing.assert_allclose(load_mesh(p).vertices, cube.vertices)


def test_load_errors(tmp_path):
    with pytest.raises(MeshFileNotFound):
        load_mesh(tmp_path / "missing.stl")
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nf 1 2 3\n")
    with pytest.raises(MeshParseError):
        load_mesh(bad)
    empty = tmp_path / "e.obj"
    empty.write_text("# nothing\n")
    with pytest.raises(EmptyMeshError):
        load_mesh(empty)


def test_ray_hits_triangle_above():
    m = TriangleMesh(np.array([[[-1, -1, 0], [1, -1, 0], [0, 1, 0]]], dtype=float))
    hit = ray_cast(m, Ray(np.array([0.0, 0.0, -1.0]), np.array([0.0, 0.0, 1.0])))
    assert hit.t == pytest.approx(1.0)
    assert hit.face == 0


def test_parallel_ray_misses():
    m = TriangleMesh(np.array([[[-1, -1, 0], [1, -1, 0], [0, 1, 0]]], dtype=float))
    assert ray_cast(m, Ray(np.array([-5.0, 0.0, 0.5]), np.array([1.0, 0.0, 0.0]))) is None


def test_random_rays_match_exhaustive(rng):
    m = shapes.cylinder(segments=25, rows=1, cap_top=False)
    assert m.n_faces == 50
    o = rng.uniform(-2, 2, (100, 3))
    d = rng.normal(size=(100, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    t1, f1 = ray_cast_many(m, o, d)
    t2, f2 = oracles.exhaustive_ray_cast(m.vertices, o, d, np.inf)
    np.testing.assert_array_equal(f1, f2)
    np.testing.assert_array_equal(t1, t2)


def test_segment_above_cube_free(cube):
    assert not segment_collides(cube, (-1, 0.5, 1.5), (2, 0.5, 1.5), 0.2)


def test_segment_through_cube_collides(cube):
    assert segment_collides(cube, (-1, 0.5, 0.5), (2, 0.5, 0.5), 0.0)


def test_segments_match_distance_oracle(rng):
    m = shapes.icosphere(1)
    radius = np.linalg.norm(m.vertices - m.centroids[:, None], axis=2).max(axis=1)
    checked = 0
    for _ in range(200):
        a, b = rng.uniform(-1.8, 1.8, (2, 3))
        # triangles whose bounding sphere is beyond reach cannot matter
        ab = b - a
        s = np.clip(((m.centroids - a) @ ab) / (ab @ ab), 0.0, 1.0)
        gap = np.linalg.norm(a + s[:, None] * ab - m.centroids, axis=1) - radius
        near = m.vertices[gap < 0.35]
        d = min((oracles.segment_triangle_distance(a, b, tri) for tri in near), default=math.inf)
        if abs(d - 0.3) < 1e-5:
            continue
        assert segment_collides(m, a, b, 0.3) == (d < 0.3)
        checked += 1
    assert checked > 190


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=15, max_size=15))
def test_segment_triangle_distance_property(vals):
    v = np.asarray(vals)
    a, b, tri = v[:3], v[3:6], v[6:].reshape(3, 3)
    if np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 1e-3:
        return
    assert segment_triangle_distance(a, b, tri) == pytest.approx(
        oracles.segment_triangle_distance(a, b, tri), abs=1e-9)


def test_mesh_rejects_non_finite():
    with pytest.raises(ValueError):
        TriangleMesh(np.array([[[0, 0, 0], [1, 0, 0], [0, math.nan, 0]]]))
