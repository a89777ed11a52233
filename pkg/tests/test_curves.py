import numpy as np
import pytest

from fisherflow.curves import Curve, continuity_residual, heat_regularize, mollify_time
from fisherflow.curves import test_functions as basis_functions
from fisherflow.errors import ValidationError
from fisherflow.functionals import Density, VectorField, kinetic_action
from fisherflow.heat import HeatOperator


def eigen_density(mesh, amp=0.5):
    x, y = mesh.vertices.T
    return Density.normalized(mesh, 1.0 + amp * np.cos(np.pi * x) * np.cos(np.pi * y))


@pytest.fixture()
def heat_curve(fine_square_mesh):
    op = HeatOperator(fine_square_mesh)
    times = np.linspace(0.0, 0.02, 11)
    return op.evolve(eigen_density(fine_square_mesh), 0.02, 2e-4, times)


class TestCurve:
    def test_validates_lengths(self, square_mesh):
        d = eigen_density(square_mesh)
        with pytest.raises(ValidationError):
            Curve(np.array([0.0, 0.1]), [d], None, "synthetic")

    def test_validates_monotone_times(self, square_mesh):
        d = eigen_density(square_mesh)
        with pytest.raises(ValidationError):
            Curve(np.array([0.1, 0.1]), [d, d], None, "synthetic")

    def test_momenta_count(self, square_mesh):
        d = eigen_density(square_mesh)
        F = VectorField.zero(square_mesh)
        with pytest.raises(ValidationError):
            Curve(np.array([0.0, 0.1]), [d, d], [F, F], "synthetic")

    def test_entropies_shape(self, heat_curve):
        assert heat_curve.entropies().shape == (len(heat_curve),)

    def test_save_writes_manifest(self, heat_curve, tmp_path):
        heat_curve.save(tmp_path / "c")
        assert (tmp_path / "c" / "curve.json").exists()
        assert (tmp_path / "c" / "density_0000.json").exists()
        assert (tmp_path / "c" / f"density_{len(heat_curve)-1:04d}.json").exists()


class TestContinuity:
    def test_heat_curve_satisfies_weak_form(self, heat_curve):
        assert continuity_residual(heat_curve) < 5e-3

    def test_zero_momenta_violate(self, heat_curve, fine_square_mesh):
        broken = Curve(
            heat_curve.times,
            heat_curve.densities,
            [VectorField.zero(fine_square_mesh) for _ in heat_curve.momenta],
            "synthetic",
        )
        assert continuity_residual(broken) > 5e-3

    def test_requires_momenta(self, square_mesh):
        d = eigen_density(square_mesh)
        c = Curve(np.array([0.0, 0.1]), [d, d], None, "synthetic")
        with pytest.raises(ValidationError):
            continuity_residual(c)

    def test_test_functions_deterministic(self, square_mesh):
        a = basis_functions(square_mesh, 14)
        b = basis_functions(square_mesh, 14)
        assert len(a) == 14
        for f, g in zip(a, b):
            assert np.array_equal(f, g)


class TestRegularize:
    def test_strictly_positive_output(self, fine_square_mesh):
        mesh = fine_square_mesh
        vals = np.zeros(mesh.n_vertices)
        vals[mesh.n_vertices // 2] = 1.0
        d = Density.normalized(mesh, vals)
        c = Curve(np.array([0.0, 0.1]), [d, d], None, "synthetic")
        op = HeatOperator(mesh)
        out = heat_regularize(c, 1e-3, op)
        assert out.provenance == "regularized"
        for dd in out.densities:
            assert dd.values.min() > 0

    def test_rejects_nonpositive_eps(self, heat_curve, fine_square_mesh):
        op = HeatOperator(fine_square_mesh)
        with pytest.raises(ValidationError):
            heat_regularize(heat_curve, 0.0, op)


class TestMollify:
    def test_constant_curve_unchanged(self, square_mesh):
        d = eigen_density(square_mesh)
        times = np.linspace(0.0, 1.0, 11)
        c = Curve(times, [d] * 11, None, "synthetic")
        out = mollify_time(c, 0.3)
        for dd in out.densities:
            assert np.allclose(dd.values, d.values, atol=1e-12)

    def test_mass_preserved(self, heat_curve):
        out = mollify_time(heat_curve, 0.005)
        for d in out.densities:
            assert d.mass() == pytest.approx(1.0, abs=1e-9)

    def test_delta_below_grid_rejected(self, heat_curve):
        with pytest.raises(ValidationError):
            mollify_time(heat_curve, 1e-6)

    def test_nonuniform_grid_rejected(self, square_mesh):
        d = eigen_density(square_mesh)
        c = Curve(np.array([0.0, 0.1, 0.3]), [d] * 3, None, "synthetic")
        with pytest.raises(ValidationError):
            mollify_time(c, 0.15)

    def test_action_not_increased(self, heat_curve):
        # time-convolution is an average, and the action integrand is
        # jointly convex, so total action can only go down
        before = sum(
            kinetic_action(
                Density.normalized(
                    heat_curve.mesh,
                    0.5 * (a.values + b.values),
                ),
                F,
            )
            * dt
            for a, b, F, dt in zip(
                heat_curve.densities[:-1],
                heat_curve.densities[1:],
                heat_curve.momenta,
                np.diff(heat_curve.times),
            )
        )
        out = mollify_time(heat_curve, 0.004)
        after = sum(
            kinetic_action(
                Density.normalized(out.mesh, 0.5 * (a.values + b.values)), F
            )
            * dt
            for a, b, F, dt in zip(
                out.densities[:-1], out.densities[1:], out.momenta,
                np.diff(out.times),
            )
        )
        assert after <= before + 1e-8
