import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisherflow.errors import MeshError, ValidationError
from fisherflow.mesh import (
    DomainSpec,
    boundary_curvature,
    build_mesh,
    geodesic_distances,
    load_domain_spec,
)


class TestDomainSpec:
    def test_rejects_nonpositive_h(self):
        with pytest.raises(ValidationError):
            DomainSpec(kind="rectangle", h=0.0, width=1.0, height=1.0)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValidationError):
            DomainSpec(kind="hexagon", h=0.1)

    def test_rejects_h_too_large(self):
        with pytest.raises(ValidationError):
            DomainSpec(kind="rectangle", h=0.6, width=1.0, height=1.0)

    def test_star_radius_positive_needed(self):
        # a >= r0 would let the boundary curve touch the origin
        with pytest.raises(ValidationError):
            DomainSpec(kind="polar_star", h=0.05, r0=1.0, a=1.0, k=3)

    def test_load_rejects_unknown_fields(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps({"kind": "rectangle", "h": 0.1, "width": 1.0,
                                 "height": 1.0, "bogus": 3}))
        with pytest.raises(ValidationError):
            load_domain_spec(p)

    def test_load_round_trip(self, tmp_path, square_spec):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(square_spec.to_dict()))
        assert load_domain_spec(p) == square_spec


class TestRectangleMesh:
    def test_total_area(self, square_mesh):
        assert square_mesh.area_total == pytest.approx(1.0, abs=1e-12)

    def test_lumped_mass_sums_to_area(self, square_mesh):
        assert square_mesh.lumped_mass.sum() == pytest.approx(
            square_mesh.area_total, abs=1e-12
        )

    def test_stiffness_rows_sum_to_zero(self, square_mesh):
        rows = np.abs(square_mesh.stiffness @ np.ones(square_mesh.n_vertices))
        assert rows.max() < 1e-10

    def test_structured_grid_is_m_matrix(self, square_mesh):
        assert square_mesh.is_m_matrix

    def test_edge_length_bound(self, square_mesh, square_spec):
        assert square_mesh.max_edge_length() <= 1.5 * square_spec.h

    def test_checksum_is_deterministic(self, square_spec):
        a = build_mesh(square_spec)
        b = build_mesh(square_spec)
        assert a.checksum == b.checksum

    def test_p1_gradient_of_linear_function_is_exact(self, square_mesh):
        f = 3.0 * square_mesh.vertices[:, 0] - 2.0 * square_mesh.vertices[:, 1]
        g = square_mesh.p1_gradient(f)
        assert np.allclose(g, [3.0, -2.0], atol=1e-12)


class TestStarMesh:
    def test_area_matches_closed_form(self, star_mesh):
        # area of r = r0 + a cos(k theta) is pi (r0^2 + a^2 / 2)
        exact = np.pi * (1.0 + 0.5**2 / 2.0)
        assert star_mesh.area_total == pytest.approx(exact, rel=5e-3)

    def test_boundary_loop_closed_and_on_boundary(self, star_mesh):
        loop = star_mesh.boundary_loop
        assert len(np.unique(loop)) == len(loop)
        pts = star_mesh.vertices[loop]
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        r_spec = np.array([star_mesh.spec.radius(t) for t in theta])
        assert np.allclose(np.linalg.norm(pts, axis=1), r_spec, atol=1e-6)

    def test_positive_areas(self, star_mesh):
        assert star_mesh.tri_areas.min() > 0


class TestCurvature:
    def test_star_nonconvexity_bound(self, star_spec):
        cb = boundary_curvature(star_spec)
        # at theta = pi/3: r = 1/2, r' = 0, r'' = 9/2, so
        # kappa = (r^2 - r r'') / r^3 = (1/4 - 9/4) / (1/8) = -16
        assert cb.S == pytest.approx(16.0, abs=0.1)
        assert cb.kappa_min == pytest.approx(-16.0, abs=0.1)

    def test_star_worst_angle(self, star_spec):
        cb = boundary_curvature(star_spec)
        assert cb.theta_at_min == pytest.approx(np.pi / 3, abs=1e-4)

    def test_circle_is_convex(self):
        circle = DomainSpec(kind="polar_star", h=0.1, r0=1.0, a=0.0, k=3)
        cb = boundary_curvature(circle)
        assert cb.S == 0.0
        assert cb.kappa_min == pytest.approx(1.0, abs=1e-6)

    def test_rectangle_reports_convex(self, square_spec):
        assert boundary_curvature(square_spec).S == 0.0

    def test_too_few_samples_rejected(self, star_spec):
        with pytest.raises(ValidationError):
            boundary_curvature(star_spec, n_samples=100)


class TestGeodesics:
    def test_opposite_corner_distance(self, square_mesh):
        v = square_mesh.vertices
        c00 = int(np.argmin(np.linalg.norm(v - [0, 0], axis=1)))
        c11 = int(np.argmin(np.linalg.norm(v - [1, 1], axis=1)))
        d = geodesic_distances(square_mesh, np.array([c00]))
        assert d[0, c11] == pytest.approx(np.sqrt(2.0), rel=0.05)

    def test_self_distance_zero(self, square_mesh):
        d = geodesic_distances(square_mesh, np.array([3]))
        assert d[0, 3] == 0.0

    def test_symmetry_on_sources(self, square_mesh):
        idx = np.array([0, 10, 25])
        d = geodesic_distances(square_mesh, idx)
        sub = d[:, idx]
        assert np.allclose(sub, sub.T, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(
    w=st.floats(0.5, 2.0),
    hgt=st.floats(0.5, 2.0),
)
def test_rectangle_area_property(w, hgt):
    spec = DomainSpec(kind="rectangle", h=0.2, width=w, height=hgt)
    mesh = build_mesh(spec)
    assert mesh.area_total == pytest.approx(w * hgt, rel=1e-9)
