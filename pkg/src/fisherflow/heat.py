"""Neumann heat semigroup via lumped-mass P1 finite elements.

One backward-Euler step solves (M + dt*A) u' = M u.  The stiffness A has
zero row sums (natural zero-flux boundary condition), so constants are
steady states and total mass is conserved exactly up to solver precision.
Backward Euler is chosen over Crank-Nicolson: on an M-matrix mesh it
preserves positivity for every dt, which the log/sqrt functionals need.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .curves import Curve
from .errors import NumericsError, ValidationError
from .functionals import Density, VectorField
from .mesh import TriMesh

__all__ = ["HeatOperator"]

_NEG_TOL = 1e-11


class HeatOperator:
    """Immutable heat stepper; factorizations are cached per timestep."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.mass_diag = mesh.lumped_mass
        self.stiffness = mesh.stiffness.tocsc()
        self._solvers: dict[float, object] = {}

    def _solver(self, dt: float):
        key = float(dt)
        lu = self._solvers.get(key)
        if lu is None:
            mat = sp.diags(self.mass_diag) + dt * self.stiffness
            try:
                lu = splu(mat.tocsc())
            except RuntimeError as exc:
                raise NumericsError(f"factorization failed for dt={dt}: {exc}") from exc
            self._solvers[key] = lu
        return lu

    def _step_values(self, values: np.ndarray, dt: float) -> np.ndarray:
        if dt <= 0:
            raise ValidationError(f"dt={dt} must be positive")
        out = self._solver(dt).solve(self.mass_diag * values)
        if not np.all(np.isfinite(out)):
            raise NumericsError("heat step produced non-finite values")
        return out

    def step(self, rho: Density, dt: float) -> Density:
        """One backward-Euler step of length dt."""
        out = self._step_values(rho.values, dt)
        if out.min() < -_NEG_TOL:
            if self.mesh.is_m_matrix:
                raise NumericsError(
                    f"negative density {out.min():.3e} on an M-matrix mesh"
                )
            out = np.maximum(out, 0.0)
            out /= self.mass_diag @ out
        else:
            out = np.maximum(out, 0.0)
        return Density(self.mesh, out)

    def evolve(
        self,
        rho0: Density,
        T: float,
        dt: float,
        sample_times,
    ) -> Curve:
        """Run to time T, sampling at the requested times (rounded to steps).

        Momenta are the heat flow's own momentum F = -grad(rho) evaluated at
        the midpoint of each sample interval, so (densities, momenta) satisfy
        the discrete continuity equation up to O(dt) + O(sample spacing^2).
        """
        sample_times = np.asarray(sample_times, dtype=float)
        if np.any(np.diff(sample_times) <= 0):
            raise ValidationError("sample_times must be strictly increasing")
        if sample_times.size == 0 or sample_times[0] < 0 or sample_times[-1] > T + 1e-12:
            raise ValidationError("sample_times must lie in [0, T]")
        n_steps = int(round(T / dt)) if T > 0 else 0
        sample_steps = np.round(sample_times / dt).astype(int) if T > 0 else [0]
        sample_steps = np.clip(sample_steps, 0, n_steps)

        values = rho0.values.copy()
        wanted = set(int(s) for s in sample_steps)
        snapshots: dict[int, np.ndarray] = {}
        if 0 in wanted:
            snapshots[0] = values.copy()
        for k in range(1, n_steps + 1):
            values = self._step_values(values, dt)
            if k in wanted:
                snapshots[k] = values.copy()
        densities = [
            Density(self.mesh, np.maximum(snapshots[int(s)], 0.0))
            for s in sample_steps
        ]
        times = sample_steps * dt if n_steps else np.array([0.0])

        momenta = []
        for a, b in zip(densities[:-1], densities[1:]):
            mid = 0.5 * (a.values + b.values)
            momenta.append(VectorField(self.mesh, -self.mesh.p1_gradient(mid)))
        return Curve(
            times=np.asarray(times, dtype=float),
            densities=densities,
            momenta=momenta if momenta else None,
            provenance="heat",
        )

    def apply_to_function(self, f: np.ndarray, t: float, dt: float) -> np.ndarray:
        """P_t f for a nodal function, no normalization or sign handling."""
        if t < 0:
            raise ValidationError("t must be nonnegative")
        out = np.asarray(f, dtype=float).copy()
        for _ in range(int(round(t / dt))):
            out = self._step_values(out, dt)
        return out
