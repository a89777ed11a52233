"""Entropic Wasserstein distances on mesh vertices.

Costs are squared in-domain distances: exact Euclidean on convex domains
(where the geodesic IS the chord) and Dijkstra graph distances otherwise.
The solver is a max-stabilized log-domain Sinkhorn with epsilon-scaling
warm starts; debiasing (Sinkhorn divergence) is on by default so that
distance-like quantities vanish on the diagonal.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .curves import Curve
from .errors import ConvergenceError, ValidationError
from .functionals import Density
from .mesh import TriMesh, boundary_curvature, geodesic_distances

__all__ = ["SinkhornConfig", "CostTable", "build_cost_table", "wasserstein", "metric_speed", "ot_epsilon"]


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float
    max_iters: int = 20_000
    tol: float = 1e-6
    debiased: bool = True

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.tol <= 0:
            raise ValidationError("tol must be positive")


@dataclass(frozen=True)
class CostTable:
    """Dense squared-distance matrix over a support subset of the vertices.

    `support` indexes mesh vertices; `assign` maps every mesh vertex to its
    nearest support point (identity when the support is the full vertex set).
    """

    matrix: np.ndarray
    mesh_checksum: str
    support: np.ndarray
    assign: np.ndarray

    def __post_init__(self) -> None:
        c = self.matrix
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError("cost matrix must be square")
        if np.abs(np.diag(c)).max(initial=0.0) > 1e-12:
            raise ValidationError("cost diagonal must vanish")
        if np.abs(c - c.T).max() > 1e-9 * (1 + np.abs(c).max()):
            raise ValidationError("cost matrix must be symmetric")
        if c.min() < 0:
            raise ValidationError("costs must be nonnegative")

    def project(self, rho: Density) -> np.ndarray:
        """Aggregate a density's vertex masses onto the support points."""
        if rho.mesh.checksum != self.mesh_checksum:
            raise ValidationError("density mesh does not match the cost table")
        mass = rho.mesh.lumped_mass * rho.values
        out = np.zeros(len(self.support))
        np.add.at(out, self.assign, mass)
        return out

    def save(self, path) -> None:
        n = self.matrix.shape[0]
        with open(path, "wb") as f:
            f.write(struct.pack("<I", n))
            f.write(self.mesh_checksum.encode("ascii").ljust(16, b"\0"))
            f.write(self.matrix.astype("<f8").tobytes(order="C"))
            f.write(self.support.astype("<i8").tobytes())
            f.write(self.assign.astype("<i8").tobytes())

    @classmethod
    def load(cls, path, mesh: TriMesh) -> "CostTable":
        with open(path, "rb") as f:
            (n,) = struct.unpack("<I", f.read(4))
            checksum = f.read(16).rstrip(b"\0").decode("ascii")
            if checksum != mesh.checksum:
                raise ValidationError(
                    f"{path}: cost table belongs to mesh {checksum}, got {mesh.checksum}"
                )
            mat = np.frombuffer(f.read(8 * n * n), dtype="<f8").reshape(n, n)
            support = np.frombuffer(f.read(8 * n), dtype="<i8")
            assign = np.frombuffer(
                f.read(8 * mesh.n_vertices), dtype="<i8"
            )
        return cls(mat.copy(), checksum, support.copy(), assign.copy())


def _is_convex(mesh: TriMesh) -> bool:
    if mesh.spec.kind == "rectangle":
        return True
    return boundary_curvature(mesh.spec).S == 0.0


def build_cost_table(mesh: TriMesh, max_support: int = 4000) -> CostTable:
    """Squared in-domain distances between (a subset of) mesh vertices."""
    n = mesh.n_vertices
    if n <= max_support:
        support = np.arange(n)
        assign = np.arange(n)
    else:
        support, assign = _subsample(mesh, max_support)
    if _is_convex(mesh):
        p = mesh.vertices[support]
        d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    else:
        d = geodesic_distances(mesh, support)[:, support]
        d = 0.5 * (d + d.T)
    c = d**2
    np.fill_diagonal(c, 0.0)
    return CostTable(c, mesh.checksum, support, assign)


def _subsample(mesh: TriMesh, max_support: int):
    """Deterministic support thinning by snapping vertices to a coarse grid."""
    from scipy.spatial import cKDTree

    v = mesh.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = float(max(hi - lo))
    spacing = span / np.sqrt(max_support)
    while True:
        cells = np.floor((v - lo) / spacing).astype(np.int64)
        _, first = np.unique(cells, axis=0, return_index=True)
        if len(first) <= max_support:
            break
        spacing *= 1.1
    support = np.sort(first)
    tree = cKDTree(v[support])
    _, idx = tree.query(v)
    return support, support_assign(idx)


def support_assign(idx: np.ndarray) -> np.ndarray:
    return np.asarray(idx, dtype=np.int64)


# ---------------------------------------------------------------------------
# log-domain Sinkhorn
# ---------------------------------------------------------------------------


_OVERRELAX = 1.5


def _symmetric_potential(logp: np.ndarray, C: np.ndarray, cfg: SinkhornConfig):
    """Fixed point of the averaged update for the symmetric problem (p, p).

    Converges geometrically with ratio ~1/2 independent of epsilon, which is
    why the self terms (and warm starts for the cross term) go through here.
    """
    eps = cfg.epsilon
    f = np.zeros_like(logp)
    delta = np.inf
    for _ in range(cfg.max_iters):
        f_new = 0.5 * (
            f - eps * logsumexp(logp[None, :] + (f[None, :] - C) / eps, axis=1)
        )
        delta = np.abs(f_new - f).max()
        f = f_new
        if delta <= 0.1 * cfg.tol * eps:
            return f
    raise ConvergenceError(
        f"symmetric Sinkhorn stalled (last update {delta:.3e})", residual=float(delta)
    )


def _scaling_ladder(logp, logq, C, eps, f, g):
    """Anneal epsilon from the cost scale down to its target value.

    Each rung leaves potentials that already balance mass between distant
    support clusters, which plain iteration at small epsilon cannot fix in
    any reasonable number of sweeps.
    """
    eps_run = float(C.max()) / 8.0 if C.max() > 0 else eps
    while eps_run > 1.5 * eps:
        for _ in range(8):
            f = -eps_run * logsumexp(logq[None, :] + (g[None, :] - C) / eps_run, axis=1)
            g = -eps_run * logsumexp(logp[:, None] + (f[:, None] - C) / eps_run, axis=0)
        eps_run /= 2.0
    return f, g


def _cross_potentials(
    logp: np.ndarray,
    logq: np.ndarray,
    C: np.ndarray,
    cfg: SinkhornConfig,
    f0: np.ndarray | None = None,
    g0: np.ndarray | None = None,
):
    """Potentials for OT_eps(p, q), warm-started and mildly overrelaxed.

    Stopping is on the dual increments: the L1 violation of the p-marginal
    after a g-update is bounded by sum_i p_i |exp(df_i/eps) - 1|, so small
    potential updates certify small marginal defects.
    """
    eps = cfg.epsilon
    warm = f0 is not None or g0 is not None
    f = np.zeros_like(logp) if f0 is None else f0.copy()
    g = np.zeros_like(logq) if g0 is None else g0.copy()
    if not warm:
        f, g = _scaling_ladder(logp, logq, C, eps, f, g)
    delta = np.inf
    omega = _OVERRELAX
    best = np.inf
    since_best = 0
    for _ in range(cfg.max_iters):
        f_new = -eps * logsumexp(logq[None, :] + (g[None, :] - C) / eps, axis=1)
        f_new = f + omega * (f_new - f)
        g_new = -eps * logsumexp(logp[:, None] + (f_new[:, None] - C) / eps, axis=0)
        g_new = g + omega * (g_new - g)
        dfe = np.clip((f_new - f) / eps, -700.0, 700.0)
        viol = float(np.exp(logp) @ np.abs(np.expm1(dfe)))
        f, g = f_new, g_new
        # stall handling: overrelaxation can cycle, and warm starts can pin a
        # slow mass-balancing mode between well-separated support clusters
        if viol < 0.5 * best:
            best, since_best = viol, 0
        else:
            since_best += 1
            if since_best > 300:
                if omega > 1.0:
                    omega = 1.0
                elif warm:
                    warm = False
                    f = np.zeros_like(logp)
                    g = np.zeros_like(logq)
                    f, g = _scaling_ladder(logp, logq, C, eps, f, g)
                    omega = _OVERRELAX
                    best = np.inf
                since_best = 0
        if viol <= 0.5 * cfg.tol:
            # exact balancing pass so the dual value is trustworthy
            f = -eps * logsumexp(logq[None, :] + (g[None, :] - C) / eps, axis=1)
            g = -eps * logsumexp(logp[:, None] + (f[:, None] - C) / eps, axis=0)
            return f, g
        delta = viol
    raise ConvergenceError(
        f"Sinkhorn did not converge: marginal proxy {delta:.3e} > tol {cfg.tol:.3e} "
        f"after {cfg.max_iters} iterations",
        residual=float(delta),
    )


def ot_epsilon(p: np.ndarray, q: np.ndarray, C: np.ndarray, cfg: SinkhornConfig) -> float:
    """Entropic cost OT_eps(p, q) = <C, pi*> + eps KL(pi* | p x q), via duality."""
    mask_p, mask_q = p > 0, q > 0
    logp = np.log(p[mask_p])
    logq = np.log(q[mask_q])
    Cm = C[np.ix_(mask_p, mask_q)]
    if mask_p.sum() == 1 and mask_q.sum() == 1:
        return float(Cm[0, 0])
    f, g = _cross_potentials(logp, logq, Cm, cfg)
    return float(np.exp(logp) @ f + np.exp(logq) @ g)


def wasserstein(
    rho: Density, sigma: Density, cost: CostTable, cfg: SinkhornConfig
) -> float:
    """Entropic Wasserstein distance; sqrt of the Sinkhorn divergence when
    debiased, sqrt of the raw entropic cost otherwise."""
    p = cost.project(rho)
    q = cost.project(sigma)
    mask_p, mask_q = p > 0, q > 0
    logp = np.log(p[mask_p])
    logq = np.log(q[mask_q])
    if not cfg.debiased:
        val = ot_epsilon(p, q, cost.matrix, cfg)
        return float(np.sqrt(max(val, 0.0)))
    Cpp = cost.matrix[np.ix_(mask_p, mask_p)]
    Cqq = cost.matrix[np.ix_(mask_q, mask_q)]
    Cpq = cost.matrix[np.ix_(mask_p, mask_q)]
    fp = _symmetric_potential(logp, Cpp, cfg)
    fq = _symmetric_potential(logq, Cqq, cfg)
    self_p = 2.0 * np.exp(logp) @ fp
    self_q = 2.0 * np.exp(logq) @ fq
    if mask_p.shape == mask_q.shape and np.array_equal(mask_p, mask_q) and np.allclose(
        p, q, rtol=0, atol=0
    ):
        return 0.0
    f, g = _cross_potentials(logp, logq, Cpq, cfg, f0=fp, g0=fq)
    val = np.exp(logp) @ f + np.exp(logq) @ g - 0.5 * (self_p + self_q)
    return float(np.sqrt(max(val, 0.0)))


def metric_speed(
    curve: Curve, t_index: int, cost: CostTable, cfg: SinkhornConfig
) -> float:
    """Central-difference metric speed with linear extrapolation to eps = 0."""
    if not (0 < t_index < len(curve) - 1):
        raise ValidationError("t_index needs both neighbors on the time grid")
    a = curve.densities[t_index - 1]
    b = curve.densities[t_index + 1]
    span = curve.times[t_index + 1] - curve.times[t_index - 1]
    cfg_half = SinkhornConfig(
        epsilon=cfg.epsilon / 2,
        max_iters=cfg.max_iters,
        tol=cfg.tol,
        debiased=cfg.debiased,
    )
    w1 = wasserstein(a, b, cost, cfg)
    w2 = wasserstein(a, b, cost, cfg_half)
    w0 = max(2.0 * w2 - w1, 0.0)
    return float(w0 / span)
