import math

import numpy as np
import pytest

from intrinsics.meshes import (
    MeshError,
    TriMesh,
    bounding_sphere,
    box,
    builtin_object_ids,
    builtin_template,
    cone,
    cylinder,
    is_closed,
    load_object_groups,
    merge,
    read_obj,
    signed_volume,
    torus,
    uv_sphere,
)

UNIT_CUBE_OBJ = """\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""


class TestPrimitives:
    @pytest.mark.parametrize(
        "mesh",
        [box(), uv_sphere(), cylinder(), cone(), torus()],
        ids=["box", "sphere", "cylinder", "cone", "torus"],
    )
    def test_closed_and_outward(self, mesh):
        assert is_closed(mesh)
        assert signed_volume(mesh) > 0

    def test_box_volume_exact(self):
        assert signed_volume(box(size=(2.0, 3.0, 0.5))) == pytest.approx(3.0)

    def test_box_has_12_triangles(self):
        assert box().triangle_count == 12

    def test_sphere_volume_approaches_analytic(self):
        coarse = signed_volume(uv_sphere(radius=1.0, rings=12, segments=18))
        fine = signed_volume(uv_sphere(radius=1.0, rings=48, segments=72))
        exact = 4.0 / 3.0 * math.pi
        assert coarse < exact  # inscribed polyhedron
        assert abs(fine - exact) < abs(coarse - exact)
        assert fine == pytest.approx(exact, rel=0.01)

    def test_cylinder_volume_approaches_analytic(self):
        vol = signed_volume(cylinder(radius=0.5, half_height=1.0, segments=96))
        assert vol == pytest.approx(math.pi * 0.25 * 2.0, rel=0.01)

    def test_normals_are_unit(self):
        for mesh in (box(), uv_sphere(), cylinder(), cone(), torus()):
            lengths = np.linalg.norm(mesh.normals, axis=1)
            assert np.allclose(lengths, 1.0)

    def test_sphere_normals_point_away_from_center(self):
        mesh = uv_sphere(radius=2.0, center=(1.0, -1.0, 0.5))
        radial = mesh.vertices - np.array([1.0, -1.0, 0.5])
        radial /= np.linalg.norm(radial, axis=1, keepdims=True)
        assert np.allclose(mesh.normals, radial, atol=1e-12)

    def test_open_mesh_detected(self):
        mesh = box()
        chopped = TriMesh(mesh.vertices, mesh.normals, mesh.faces[:-1])
        assert not is_closed(chopped)

    def test_transformed_preserves_closedness_and_scales_volume(self):
        mesh = box().transformed(scale=2.0, yaw=0.7, offset=(3.0, -1.0, 0.5))
        assert is_closed(mesh)
        assert signed_volume(mesh) == pytest.approx(8.0)


class TestTemplates:
    def test_at_least_six_templates(self):
        assert len(builtin_object_ids()) >= 6

    @pytest.mark.parametrize("template_id", builtin_object_ids())
    def test_at_least_two_groups(self, template_id):
        assert len(builtin_template(template_id)) >= 2

    @pytest.mark.parametrize("template_id", builtin_object_ids())
    def test_groups_closed_outward(self, template_id):
        for group in builtin_template(template_id):
            assert is_closed(group.mesh), group.name
            assert signed_volume(group.mesh) > 0, group.name

    @pytest.mark.parametrize("template_id", builtin_object_ids())
    def test_group_names_unique(self, template_id):
        names = [g.name for g in builtin_template(template_id)]
        assert len(names) == len(set(names))

    def test_bounding_sphere_covers_all_vertices(self):
        groups = builtin_template("chair")
        center, radius = bounding_sphere(groups)
        for g in groups:
            d = np.linalg.norm(g.mesh.vertices - center, axis=1)
            assert d.max() <= radius + 1e-12

    def test_loader_resolves_builtin_source(self):
        groups = load_object_groups("builtin:rocket")
        assert [g.name for g in groups] == [g.name for g in builtin_template("rocket")]

    def test_loader_rejects_unknown_source(self):
        with pytest.raises(MeshError):
            load_object_groups("stl:whatever")
        with pytest.raises(MeshError):
            load_object_groups("builtin:nope")


class TestObjImport:
    def test_unit_cube(self, tmp_path):
        path = tmp_path / "cube.obj"
        path.write_text(UNIT_CUBE_OBJ)
        groups = read_obj(path)
        assert len(groups) == 1
        mesh = groups[0].mesh
        assert mesh.triangle_count == 12
        assert np.allclose(mesh.vertices.min(axis=0), [0, 0, 0])
        assert np.allclose(mesh.vertices.max(axis=0), [1, 1, 1])
        assert is_closed(mesh)
        assert signed_volume(mesh) == pytest.approx(1.0)

    def test_computed_normals_point_outward(self, tmp_path):
        path = tmp_path / "cube.obj"
        path.write_text(UNIT_CUBE_OBJ)
        mesh = read_obj(path)[0].mesh
        center = mesh.vertices.mean(axis=0)
        outward = np.einsum("ij,ij->i", mesh.normals, mesh.vertices - center)
        assert (outward > 0).all()

    def test_groups_and_normal_records(self, tmp_path):
        text = (
            "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            "vn 0 0 1\n"
            "g tri_a\nf 1//1 2//1 3//1\n"
            "g tri_b\nf 1//1 3//1 2//1\n"
        )
        path = tmp_path / "two.obj"
        path.write_text(text)
        groups = read_obj(path)
        assert [g.name for g in groups] == ["tri_a", "tri_b"]
        assert np.allclose(groups[0].mesh.normals, [0, 0, 1])

    def test_negative_indices(self, tmp_path):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n"
        path = tmp_path / "neg.obj"
        path.write_text(text)
        mesh = read_obj(path)[0].mesh
        assert mesh.triangle_count == 1
        assert np.allclose(mesh.vertices[mesh.faces[0]][1], [1, 0, 0])

    def test_slash_formats(self, tmp_path):
        text = (
            "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            "vt 0 0\nvt 1 0\nvt 0 1\n"
            "vn 0 0 1\n"
            "f 1/1/1 2/2/1 3/3/1\n"
        )
        path = tmp_path / "vtn.obj"
        path.write_text(text)
        mesh = read_obj(path)[0].mesh
        assert mesh.triangle_count == 1

    def test_rejects_out_of_range_index(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
        with pytest.raises(MeshError):
            read_obj(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("# nothing\n")
        with pytest.raises(MeshError):
            read_obj(path)


class TestMerge:
    def test_merge_offsets_faces(self):
        a = box(center=(-2, 0, 0))
        b = box(center=(2, 0, 0))
        merged = merge([a, b])
        assert merged.triangle_count == 24
        assert is_closed(merged)
        assert signed_volume(merged) == pytest.approx(2.0)
