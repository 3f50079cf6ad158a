"""Mesh generation, promotion, geometry maps, and file round-trips."""

import numpy as np
import pytest

from gesfem.errors import GeometryError, ParseError, ResourceError, ValidationError
from gesfem.fileio import read_off, write_off, write_vtk, write_vtk_quadratic
from gesfem.mesh import (
    SurfaceMesh,
    compute_frames,
    element_frame,
    icosphere,
    project_to_surface,
    promote_to_quadratic,
    surface_area,
)
from gesfem.surfaces import make_surface


def flat_triangle():
    nodes = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return SurfaceMesh(nodes, np.array([[0, 1, 2]]), degree=1, validate=False)


class TestIcosphere:
    def test_level0_is_icosahedron(self):
        m = icosphere(0, 1.0)
        assert m.n_nodes == 12
        assert m.n_elements == 20

    def test_level2_counts(self):
        m = icosphere(2, 1.0)
        assert m.n_nodes == 10 * 4**2 + 2 == 162
        assert m.n_elements == 20 * 4**2 == 320

    def test_vertices_on_sphere(self):
        m = icosphere(1, 2.0)
        assert np.abs(np.linalg.norm(m.nodes, axis=1) - 2.0).max() < 1e-14

    def test_level_guard(self):
        with pytest.raises(ResourceError):
            icosphere(8)

    def test_area_increases_towards_sphere(self):
        areas = [surface_area(icosphere(lvl)) for lvl in range(4)]
        assert all(a1 < a2 for a1, a2 in zip(areas, areas[1:]))
        assert all(a < 4 * np.pi for a in areas)

    def test_closed_orientable(self):
        icosphere(2).validate_topology()  # raises on violation


class TestPromotion:
    def test_midpoints_on_unit_sphere(self):
        mq = promote_to_quadratic(icosphere(0), make_surface("sphere"))
        assert np.abs(np.linalg.norm(mq.nodes, axis=1) - 1.0).max() < 1e-12

    def test_planar_surface_keeps_midpoints(self):
        # plane z = 0 as an ellipsoid-like level set is not in the catalog;
        # a sphere of huge radius behaves like a plane near a tiny triangle
        big = make_surface("sphere", radius=1000.0)
        tri = icosphere(0, 1000.0)
        mq = promote_to_quadratic(tri, big)
        mids = mq.nodes[12:]
        assert np.abs(np.linalg.norm(mids, axis=1) - 1000.0).max() < 1e-9

    def test_quadratic_area_beats_flat(self):
        sphere = make_surface("sphere")
        for lvl in (1, 2):
            flat = icosphere(lvl)
            quad_mesh = promote_to_quadratic(flat, sphere)
            err_flat = abs(surface_area(flat) - 4 * np.pi)
            err_quad = abs(surface_area(quad_mesh) - 4 * np.pi)
            assert err_quad < err_flat / 2.0

    def test_requires_degree1(self):
        sphere = make_surface("sphere")
        mq = promote_to_quadratic(icosphere(1), sphere)
        with pytest.raises(ValidationError):
            promote_to_quadratic(mq, sphere)

    def test_vertices_off_surface_rejected(self):
        sphere = make_surface("sphere")
        with pytest.raises(GeometryError):
            promote_to_quadratic(icosphere(1, radius=1.01), sphere)


class TestElementFrame:
    def test_flat_triangle_normal_and_area(self):
        frame = element_frame(flat_triangle(), 0, (1.0 / 3.0, 1.0 / 3.0))
        assert np.allclose(frame.normal, [0.0, 0.0, 1.0], atol=1e-14)
        assert abs(frame.area_element - 1.0) < 1e-14

    def test_flat_triangle_p1_gradient(self):
        frame = element_frame(flat_triangle(), 0, (1.0 / 3.0, 1.0 / 3.0))
        assert np.allclose(frame.basis_gradients[0], [-1.0, -1.0, 0.0], atol=1e-14)
        assert np.allclose(frame.basis_gradients[1], [1.0, 0.0, 0.0], atol=1e-14)
        assert np.allclose(frame.basis_gradients[2], [0.0, 1.0, 0.0], atol=1e-14)

    def test_gradients_orthogonal_to_normal(self):
        mq = promote_to_quadratic(icosphere(2), make_surface("sphere"))
        frame = element_frame(mq, 5, (0.3, 0.2))
        dots = frame.basis_gradients @ frame.normal
        assert np.abs(dots).max() < 1e-12

    def test_curved_sphere_element_normal_matches_radial(self):
        mq = promote_to_quadratic(icosphere(3), make_surface("sphere"))
        bary_corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
        worst = 0.0
        for elem in range(0, mq.n_elements, 97):
            for pt in bary_corners:
                frame = element_frame(mq, elem, pt)
                radial = frame.position / np.linalg.norm(frame.position)
                worst = max(worst, np.linalg.norm(frame.normal - radial))
        h = mq.mesh_size()
        assert worst < h**2

    def test_ref_point_outside_rejected(self):
        with pytest.raises(ValidationError):
            element_frame(flat_triangle(), 0, (0.8, 0.8))

    def test_degenerate_element_rejected(self):
        nodes = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        bad = SurfaceMesh(nodes, np.array([[0, 1, 2]]), degree=1, validate=False)
        with pytest.raises(GeometryError):
            compute_frames(bad)


class TestTopologyValidation:
    def test_hole_detected(self):
        m = icosphere(0)
        with pytest.raises(ValidationError, match="closed"):
            SurfaceMesh(m.nodes, m.elements[:-1], degree=1)

    def test_orientation_flip_detected(self):
        m = icosphere(0)
        els = m.elements.copy()
        els[0] = els[0][::-1]
        with pytest.raises(ValidationError, match="orient"):
            SurfaceMesh(m.nodes, els, degree=1)

    def test_unreferenced_node_detected(self):
        m = icosphere(0)
        nodes = np.vstack([m.nodes, [[42.0, 0.0, 0.0]]])
        with pytest.raises(ValidationError, match="referenced"):
            SurfaceMesh(nodes, m.elements, degree=1)


class TestFileIO:
    def test_off_round_trip(self, tmp_path):
        m = icosphere(1)
        path = tmp_path / "sphere.off"
        write_off(path, m)
        back = read_off(path)
        assert (back.elements == m.elements).all()
        assert (back.nodes == m.nodes).all()  # bit-exact via 17 digits

    def test_off_hole_rejected(self, tmp_path):
        m = icosphere(0)
        path = tmp_path / "open.off"
        with open(path, "w") as fh:
            fh.write(f"OFF\n{m.n_nodes} {m.n_elements - 1} 0\n")
            for p in m.nodes:
                fh.write(f"{p[0]} {p[1]} {p[2]}\n")
            for f in m.elements[:-1]:
                fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
        with pytest.raises(ValidationError, match="closed|referenced"):
            read_off(path)

    def test_off_malformed_reports_line(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\nnot-a-number 0 0\n3 0 1 2\n")
        with pytest.raises(ParseError) as info:
            read_off(path)
        assert info.value.line == 5

    def test_vtk_contains_point_data(self, tmp_path):
        m = icosphere(1)
        path = tmp_path / "mesh.vtk"
        write_vtk(path, m, fields={"u": np.ones(m.n_nodes)})
        text = path.read_text()
        assert f"POINT_DATA {m.n_nodes}" in text
        assert "SCALARS u double 1" in text
        assert "POLYGONS" in text

    def test_vtk_quadratic_cells(self, tmp_path):
        mq = promote_to_quadratic(icosphere(1), make_surface("sphere"))
        path = tmp_path / "mesh.vtk"
        write_vtk_quadratic(path, mq)
        text = path.read_text()
        assert "CELL_TYPES" in text
        assert "\n22\n" in text


class TestProjectedSurfaces:
    def test_ellipsoid_vertices_on_surface(self):
        surf = make_surface("ellipsoid", a=2.0, b=1.0, c=1.0)
        m = project_to_surface(icosphere(2), surf)
        assert np.abs(surf.value(m.nodes)).max() < 1e-10

    def test_dumbbell_and_cup_seed_meshes(self):
        for kind in ("dumbbell", "cup"):
            surf = make_surface(kind)
            m = project_to_surface(icosphere(2), surf)
            assert np.abs(surf.value(m.nodes)).max() < 1e-10
            mq = promote_to_quadratic(m, surf)
            compute_frames(mq)  # no degenerate elements
