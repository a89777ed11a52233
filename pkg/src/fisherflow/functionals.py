"""Entropy, Fisher information and kinetic action on discrete densities.

Densities are nodal and piecewise linear; integrals use the lumped vertex
weights (entropy-type functionals) or per-triangle constant gradients
(Dirichlet-type functionals).  The primary Fisher formula is the sqrt form
4*int |grad sqrt(rho)|^2, which needs no case analysis at rho = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .mesh import TriMesh

__all__ = [
    "Density",
    "VectorField",
    "entropy",
    "fisher",
    "fisher_log_form",
    "fisher_m",
    "energy_m",
    "kinetic_action",
    "log_derivative",
]

_MASS_RTOL = 1e-9


@dataclass(frozen=True)
class Density:
    """Nonnegative nodal density with unit total mass (mu = rho * V)."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.mesh.n_vertices,):
            raise ValidationError(
                f"density has {vals.shape} values for {self.mesh.n_vertices} vertices"
            )
        if np.any(vals < 0):
            raise ValidationError(f"negative density (min {vals.min():.3e})")
        m = self.mass()
        if abs(m - 1.0) > _MASS_RTOL:
            raise ValidationError(f"density mass {m!r} != 1")

    def mass(self) -> float:
        return float(self.mesh.lumped_mass @ self.values)

    @classmethod
    def normalized(cls, mesh: TriMesh, values: np.ndarray) -> "Density":
        """Clip tiny negatives and rescale to unit mass."""
        v = np.maximum(np.asarray(values, dtype=float), 0.0)
        total = mesh.lumped_mass @ v
        if total <= 0:
            raise ValidationError("cannot normalize a density with no mass")
        return cls(mesh, v / total)

    @classmethod
    def uniform(cls, mesh: TriMesh) -> "Density":
        return cls(mesh, np.full(mesh.n_vertices, 1.0 / mesh.area_total))

    def to_dict(self) -> dict:
        return {"mesh_checksum": self.mesh.checksum, "values": self.values.tolist()}

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path, mesh: TriMesh) -> "Density":
        with open(path) as f:
            raw = json.load(f)
        if raw.get("mesh_checksum") != mesh.checksum:
            raise ValidationError(
                f"{path}: density was saved for mesh {raw.get('mesh_checksum')}, "
                f"got {mesh.checksum}"
            )
        return cls(mesh, np.asarray(raw["values"], dtype=float))


@dataclass(frozen=True)
class VectorField:
    """Per-triangle constant 2D field; `undefined` flags triangles where the
    defining expression had no meaning (e.g. log gradient at a zero vertex)."""

    mesh: TriMesh
    vectors: np.ndarray
    undefined: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        vec = np.ascontiguousarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", vec)
        m = len(self.mesh.triangles)
        if vec.shape != (m, 2):
            raise ValidationError(f"vector field shape {vec.shape}, expected ({m}, 2)")
        if not np.all(np.isfinite(vec)):
            raise ValidationError("vector field has non-finite entries")
        und = self.undefined
        und = np.zeros(m, dtype=bool) if und is None else np.asarray(und, dtype=bool)
        object.__setattr__(self, "undefined", und)

    @classmethod
    def zero(cls, mesh: TriMesh) -> "VectorField":
        return cls(mesh, np.zeros((len(mesh.triangles), 2)))


def entropy(rho: Density) -> float:
    """H(mu) = int rho log rho dV, with 0*log(0) = 0."""
    v = rho.values
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return float(rho.mesh.lumped_mass @ out)


def fisher(rho: Density) -> float:
    """I(mu) = 4 int |grad sqrt(rho)|^2 dV on the P1 interpolant of sqrt(rho)."""
    g = rho.mesh.p1_gradient(np.sqrt(rho.values))
    return float(4.0 * rho.mesh.tri_areas @ np.einsum("td,td->t", g, g))


def fisher_log_form(rho: Density) -> float:
    """Log-derivative form int |grad log rho|^2 dmu; needs rho > 0 nodally.

    Kept as an independent discretization of the same continuum quantity;
    the two forms agree up to O(h) on smooth positive densities.
    """
    if np.any(rho.values <= 0):
        raise ValidationError("log form needs a strictly positive density")
    g = rho.mesh.p1_gradient(np.log(rho.values))
    rho_bar = rho.mesh.tri_average(rho.values)
    return float(
        rho.mesh.tri_areas @ (rho_bar * np.einsum("td,td->t", g, g))
    )


def fisher_m(rho: Density, m: float) -> float:
    """Porous-medium Fisher functional int |grad rho^(m-1)|^2 rho dV."""
    if not (1.0 < m < 1.5):
        raise ValidationError(f"m={m} outside the admissible window (1, 3/2)")
    g = rho.mesh.p1_gradient(rho.values ** (m - 1.0))
    rho_bar = rho.mesh.tri_average(rho.values)
    return float(rho.mesh.tri_areas @ (rho_bar * np.einsum("td,td->t", g, g)))


def energy_m(rho: Density, m: float) -> float:
    """Porous-medium energy int rho^m dV."""
    if m <= 1.0:
        raise ValidationError(f"m={m} must exceed 1")
    return float(rho.mesh.lumped_mass @ rho.values**m)


def kinetic_action(rho: Density, F: VectorField) -> float:
    """A(mu, F) = int |F|^2 / mu, with the 0/0 = 0 convention; may be inf."""
    mesh = rho.mesh
    a = mesh.tri_average(rho.values)
    b2 = np.einsum("td,td->t", F.vectors, F.vectors)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = b2[pos] / a[pos]
    bad = (~pos) & (b2 > 0)
    if np.any(bad):
        return float("inf")
    return float(mesh.tri_areas @ out)


def log_derivative(rho: Density) -> VectorField:
    """Per-triangle grad(log rho); triangles touching a zero vertex are
    flagged undefined and carry a zero vector."""
    v = rho.values
    if np.all(v == 0):
        raise ValidationError("all-zero density has no logarithmic derivative")
    mesh = rho.mesh
    safe = np.where(v > 0, v, 1.0)
    g = mesh.p1_gradient(np.log(safe))
    undefined = np.any(v[mesh.triangles] <= 0, axis=1)
    g[undefined] = 0.0
    return VectorField(mesh, g, undefined)
