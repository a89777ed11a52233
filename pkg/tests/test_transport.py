import itertools

import numpy as np
import pytest

from fisherflow.errors import ValidationError
from fisherflow.functionals import Density, fisher
from fisherflow.heat import HeatOperator
from fisherflow.mesh import DomainSpec, build_mesh
from fisherflow.transport import (
    CostTable,
    SinkhornConfig,
    build_cost_table,
    metric_speed,
    ot_epsilon,
    wasserstein,
)


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(DomainSpec(kind="rectangle", h=0.1, width=1.0, height=1.0))


@pytest.fixture(scope="module")
def cost(mesh):
    return build_cost_table(mesh)


def dirac(mesh, idx, n):
    v = np.zeros(mesh.n_vertices)
    v[idx] = (1.0 / n) / mesh.lumped_mass[idx]
    return Density(mesh, v)


class TestConfig:
    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(ValidationError):
            SinkhornConfig(epsilon=0.0)

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(ValidationError):
            SinkhornConfig(epsilon=1e-2, tol=0.0)


class TestCostTable:
    def test_zero_diagonal_and_symmetry(self, cost):
        assert np.abs(np.diag(cost.matrix)).max() == 0.0
        assert np.allclose(cost.matrix, cost.matrix.T)

    def test_convex_domain_uses_euclidean(self, mesh, cost):
        i, j = 3, 47
        d2 = np.sum((mesh.vertices[i] - mesh.vertices[j]) ** 2)
        assert cost.matrix[i, j] == pytest.approx(d2, rel=1e-12)

    def test_star_costs_at_least_euclidean(self, star_mesh):
        table = build_cost_table(star_mesh)
        v = star_mesh.vertices[table.support]
        d2 = np.sum((v[:, None] - v[None, :]) ** 2, axis=2)
        assert np.all(table.matrix >= d2 - 1e-9)

    def test_project_conserves_mass(self, mesh, cost):
        d = Density.uniform(mesh)
        assert cost.project(d).sum() == pytest.approx(1.0, abs=1e-12)

    def test_save_load_round_trip(self, mesh, cost, tmp_path):
        p = tmp_path / "cost.bin"
        cost.save(p)
        c2 = CostTable.load(p, mesh)
        assert np.array_equal(c2.matrix, cost.matrix)
        assert np.array_equal(c2.support, cost.support)

    def test_load_refuses_wrong_mesh(self, cost, star_mesh, tmp_path):
        p = tmp_path / "cost.bin"
        cost.save(p)
        with pytest.raises(ValidationError):
            CostTable.load(p, star_mesh)

    def test_rejects_negative_costs(self, mesh):
        n = mesh.n_vertices
        m = -np.ones((n, n))
        np.fill_diagonal(m, 0.0)
        with pytest.raises(ValidationError):
            CostTable(m, mesh.checksum, np.arange(n), np.arange(n))


class TestWasserstein:
    def test_identical_inputs_give_zero(self, mesh, cost):
        d = Density.uniform(mesh)
        cfg = SinkhornConfig(epsilon=1e-2)
        assert wasserstein(d, d, cost, cfg) == 0.0

    def test_symmetry(self, mesh, cost):
        x, y = mesh.vertices.T
        a = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * x))
        b = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * y))
        cfg = SinkhornConfig(epsilon=4e-3, tol=1e-5)
        w_ab = wasserstein(a, b, cost, cfg)
        w_ba = wasserstein(b, a, cost, cfg)
        assert w_ab == pytest.approx(w_ba, rel=1e-3)

    def test_two_diracs_exact(self, mesh, cost):
        v = mesh.vertices
        i = int(np.argmin(np.linalg.norm(v - [0, 0], axis=1)))
        j = int(np.argmin(np.linalg.norm(v - [1, 1], axis=1)))
        a = dirac(mesh, np.array([i]), 1)
        b = dirac(mesh, np.array([j]), 1)
        cfg = SinkhornConfig(epsilon=1e-3, tol=1e-5)
        w = wasserstein(a, b, cost, cfg)
        assert w == pytest.approx(np.sqrt(2.0), rel=1e-3)

    def test_epsilon_monotonicity(self, mesh, cost):
        # raw entropic cost decreases as the regularization shrinks
        x, y = mesh.vertices.T
        a = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * x))
        b = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * y))
        p, q = cost.project(a), cost.project(b)
        cfg1 = SinkhornConfig(epsilon=2e-2, tol=1e-5)
        cfg2 = SinkhornConfig(epsilon=1e-2, tol=1e-5)
        v1 = ot_epsilon(p, q, cost.matrix, cfg1)
        v2 = ot_epsilon(p, q, cost.matrix, cfg2)
        assert v2 <= v1 + 1e-6

    def test_permutation_oracle(self, mesh, cost):
        rng = np.random.default_rng(11)
        cfg_base = dict(tol=1e-5)
        for _ in range(5):
            n = int(rng.integers(2, 5))
            idx_p = rng.choice(mesh.n_vertices, size=n, replace=False)
            idx_q = rng.choice(mesh.n_vertices, size=n, replace=False)
            a = dirac(mesh, idx_p, n)
            b = dirac(mesh, idx_q, n)
            C = cost.matrix[np.ix_(idx_p, idx_q)]
            exact = np.sqrt(
                min(
                    sum(C[i, s[i]] for i in range(n))
                    for s in itertools.permutations(range(n))
                )
                / n
            )
            w1 = wasserstein(a, b, cost, SinkhornConfig(epsilon=1e-3, **cfg_base))
            w2 = wasserstein(a, b, cost, SinkhornConfig(epsilon=5e-4, **cfg_base))
            est = max(2 * w2 - w1, 0.0)
            assert est == pytest.approx(exact, rel=0.01)


class TestMetricSpeed:
    def test_needs_interior_index(self, mesh, cost):
        op = HeatOperator(mesh)
        x, y = mesh.vertices.T
        rho0 = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y))
        curve = op.evolve(rho0, 0.03, 1e-3, [0.01, 0.02, 0.03])
        cfg = SinkhornConfig(epsilon=4e-3)
        with pytest.raises(ValidationError):
            metric_speed(curve, 0, cost, cfg)

    def test_matches_root_fisher_on_heat_flow(self, fine_square_mesh):
        # along the heat flow the metric speed equals sqrt(Fisher);
        # needs a cloud fine enough to resolve the Sinkhorn kernel
        mesh = fine_square_mesh
        cost = build_cost_table(mesh)
        op = HeatOperator(mesh)
        x, y = mesh.vertices.T
        rho0 = Density.normalized(mesh, 1.0 + 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y))
        t, dt = 0.02, 5e-4
        curve = op.evolve(rho0, t + 2 * dt, dt, [t - 2 * dt, t, t + 2 * dt])
        cfg = SinkhornConfig(epsilon=4e-3, tol=1e-6)
        speed = metric_speed(curve, 1, cost, cfg)
        ref = np.sqrt(fisher(curve.densities[1]))
        assert speed == pytest.approx(ref, rel=0.10)
