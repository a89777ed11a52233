"""Time-sampled curves of densities with staggered momenta.

A Curve holds densities at strictly increasing times and, optionally, one
interval-centered momentum field per gap.  The staggering makes the discrete
continuity equation a telescoping identity against lumped test integrals.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .functionals import Density, VectorField, entropy

__all__ = ["Curve", "continuity_residual", "heat_regularize", "mollify_time", "test_functions"]


@dataclass(frozen=True)
class Curve:
    times: np.ndarray
    densities: list[Density]
    momenta: list[VectorField] | None
    provenance: str  # heat | jko | synthetic | regularized

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if len(t) != len(self.densities):
            raise ValidationError("times and densities length mismatch")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        mesh = self.densities[0].mesh
        if any(d.mesh is not mesh for d in self.densities):
            raise ValidationError("all curve densities must share one mesh")
        if self.momenta is not None:
            if len(self.momenta) != len(t) - 1:
                raise ValidationError("need exactly one momentum per time interval")
            if any(F.mesh is not mesh for F in self.momenta):
                raise ValidationError("momenta live on a different mesh")

    @property
    def mesh(self):
        return self.densities[0].mesh

    def __len__(self) -> int:
        return len(self.times)

    def entropies(self) -> np.ndarray:
        return np.array([entropy(d) for d in self.densities])

    def save(self, directory) -> None:
        """Export as manifest + one JSON density array per sample."""
        os.makedirs(directory, exist_ok=True)
        manifest = {
            "times": self.times.tolist(),
            "provenance": self.provenance,
            "mesh_checksum": self.mesh.checksum,
            "n_samples": len(self),
        }
        with open(os.path.join(directory, "curve.json"), "w") as f:
            json.dump(manifest, f, indent=1)
        for i, d in enumerate(self.densities):
            d.save(os.path.join(directory, f"density_{i:04d}.json"))


def test_functions(mesh, count: int) -> list[np.ndarray]:
    """Deterministic nodal test functions: low-order monomials, then
    separable cosine products fitted to the bounding box."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    x0, x1 = x.min(), x.max()
    y0, y1 = y.min(), y.max()
    xn = (x - x0) / (x1 - x0)
    yn = (y - y0) / (y1 - y0)
    funcs = [
        np.ones_like(x), xn, yn, xn * yn, xn**2, yn**2,
        xn**3, xn**2 * yn, xn * yn**2, yn**3,
    ]
    p = 1
    while len(funcs) < count:
        for q in range(p + 1):
            funcs.append(np.cos(np.pi * p * xn) * np.cos(np.pi * q * yn))
            if q != p:
                funcs.append(np.cos(np.pi * q * xn) * np.cos(np.pi * p * yn))
            if len(funcs) >= count:
                break
        p += 1
    return funcs[:count]


def continuity_residual(curve: Curve, test_count: int = 12) -> float:
    """Worst weak-form defect of d/dt mu + div F = 0 over the curve span,
    normalized per test function by its sup norm."""
    if curve.momenta is None:
        raise ValidationError("curve has no momenta")
    mesh = curve.mesh
    worst = 0.0
    dts = np.diff(curve.times)
    for phi in test_functions(mesh, test_count):
        gphi = mesh.p1_gradient(phi)
        lhs = mesh.lumped_mass @ (phi * curve.densities[-1].values) - (
            mesh.lumped_mass @ (phi * curve.densities[0].values)
        )
        flux = 0.0
        for dt, F in zip(dts, curve.momenta):
            flux += dt * float(mesh.tri_areas @ np.einsum("td,td->t", gphi, F.vectors))
        scale = np.abs(phi).max()
        worst = max(worst, abs(lhs - flux) / scale)
    return worst


def heat_regularize(curve: Curve, eps: float, op, n_substeps: int = 10) -> Curve:
    """Replace every slice by its time-eps Neumann heat image P*_eps mu_t."""
    if eps <= 0:
        raise ValidationError("regularization time eps must be positive")
    dt = eps / n_substeps
    new = []
    for d in curve.densities:
        cur = d
        for _ in range(n_substeps):
            cur = op.step(cur, dt)
        new.append(cur)
    for d in new:
        if d.values.min() <= 0:
            raise ValidationError(
                "heat regularization left a zero nodal value; increase eps"
            )
    return replace(curve, densities=new, provenance="regularized")


def _bump_kernel(offsets: np.ndarray) -> np.ndarray:
    """C-infinity bump exp(-1/(1-s^2)) on |s| < 1, discretely normalized."""
    k = np.zeros_like(offsets)
    inside = np.abs(offsets) < 1.0
    k[inside] = np.exp(-1.0 / (1.0 - offsets[inside] ** 2))
    total = k.sum()
    if total <= 0:
        raise ValidationError("mollifier kernel vanished on the grid")
    return k / total


def mollify_time(curve: Curve, delta: float) -> Curve:
    """Convolve densities (and momenta) in time against a bump of width
    delta, with constant extension past both endpoints."""
    if delta <= 0:
        raise ValidationError("delta must be positive")
    if len(curve) < 2:
        raise ValidationError("mollification needs at least two samples")
    dts = np.diff(curve.times)
    dt = dts.mean()
    if np.any(np.abs(dts - dt) > 1e-9 * max(abs(dt), 1.0)):
        raise ValidationError("mollify_time requires a uniform time grid")
    r = int(np.floor(delta / dt + 1e-12))
    if r < 1:
        raise ValidationError(
            f"delta={delta} is below the grid spacing {dt}: kernel unresolvable"
        )
    offs = np.arange(-r, r + 1)
    kernel = _bump_kernel(offs * dt / delta)

    n = len(curve)
    vals = np.stack([d.values for d in curve.densities])
    new_vals = np.zeros_like(vals)
    for l, w in zip(offs, kernel):
        idx = np.clip(np.arange(n) + l, 0, n - 1)
        new_vals += w * vals[idx]
    densities = [Density(curve.mesh, v) for v in new_vals]

    momenta = None
    if curve.momenta is not None:
        fvals = np.stack([F.vectors for F in curve.momenta])
        new_f = np.zeros_like(fvals)
        for l, w in zip(offs, kernel):
            idx = np.clip(np.arange(n - 1) + l, 0, n - 2)
            new_f += w * fvals[idx]
        momenta = [VectorField(curve.mesh, f) for f in new_f]
    return Curve(curve.times, densities, momenta, curve.provenance)
