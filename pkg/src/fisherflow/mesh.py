"""Triangulations of flat 2D domains with parametric boundaries.

Two domain families: axis-aligned rectangles (convex, structured mesh) and
polar stars r(theta) = r0 + a*cos(k*theta) (non-convex for large enough a,
unstructured mesh from a hex lattice + Delaunay).  The mesh carries the
lumped mass vector and the cotangent stiffness matrix, i.e. the discrete
volume measure and Neumann Laplacian used everywhere else.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as _dijkstra
from scipy.spatial import Delaunay, cKDTree

from .errors import MeshError, ValidationError

__all__ = [
    "DomainSpec",
    "TriMesh",
    "CurvatureBound",
    "build_mesh",
    "boundary_curvature",
    "geodesic_distances",
    "load_domain_spec",
]


@dataclass(frozen=True)
class DomainSpec:
    """Parametric description of the computational domain.

    kind is "rectangle" (width x height) or "polar_star"
    (r(theta) = r0 + a*cos(k*theta)); h is the target edge length.
    """

    kind: str
    h: float
    width: float = 1.0
    height: float = 1.0
    r0: float = 1.0
    a: float = 0.0
    k: int = 3

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("rectangle", "polar_star"):
            raise ValidationError(f"unknown domain kind {self.kind!r}")
        if not (self.h > 0):
            raise ValidationError(f"target edge length h={self.h} must be positive")
        if self.kind == "rectangle":
            if self.width <= 0 or self.height <= 0:
                raise ValidationError("rectangle sides must be positive")
            if self.h > min(self.width, self.height) / 2:
                raise ValidationError(
                    f"h={self.h} exceeds half the smallest rectangle side"
                )
        else:
            if self.k < 2 or int(self.k) != self.k:
                raise ValidationError("polar_star frequency k must be an integer >= 2")
            if self.a < 0 or self.r0 <= 0:
                raise ValidationError("polar_star needs r0 > 0 and a >= 0")
            if self.a >= self.r0:
                raise ValidationError(
                    f"polar_star amplitude a={self.a} >= r0={self.r0}: "
                    "boundary radius would vanish"
                )
            if self.h > (self.r0 - self.a) / 2:
                raise ValidationError(
                    f"h={self.h} exceeds the feature size (r0-a)/2"
                )

    # boundary curve r(theta) and derivatives (polar_star only)
    def radius(self, theta: np.ndarray) -> np.ndarray:
        return self.r0 + self.a * np.cos(self.k * theta)

    def radius_d1(self, theta: np.ndarray) -> np.ndarray:
        return -self.a * self.k * np.sin(self.k * theta)

    def radius_d2(self, theta: np.ndarray) -> np.ndarray:
        return -self.a * self.k**2 * np.cos(self.k * theta)

    def boundary_point(self, theta: np.ndarray) -> np.ndarray:
        r = self.radius(theta)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def contains(self, pts: np.ndarray, pad: float = 0.0) -> np.ndarray:
        """Pointwise inside test; pad > 0 shrinks the domain."""
        pts = np.atleast_2d(pts)
        if self.kind == "rectangle":
            x, y = pts[:, 0], pts[:, 1]
            return (
                (x >= pad)
                & (x <= self.width - pad)
                & (y >= pad)
                & (y <= self.height - pad)
            )
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        rho = np.hypot(pts[:, 0], pts[:, 1])
        return rho <= self.radius(theta) - pad

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "h": self.h}
        if self.kind == "rectangle":
            d.update(width=self.width, height=self.height)
        else:
            d.update(r0=self.r0, a=self.a, k=self.k)
        return d


@dataclass(frozen=True)
class CurvatureBound:
    """Boundary convexity defect S = max(0, -kappa_min) and Ricci bound K."""

    S: float
    K: float
    kappa_min: float
    theta_at_min: float

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "K": self.K,
            "kappa_min": self.kappa_min,
            "theta_at_min": self.theta_at_min,
        }


@dataclass
class TriMesh:
    """Immutable triangulation with FEM operators attached.

    vertices: (n, 2); triangles: (m, 3) CCW; boundary_loop: ordered indices
    around the boundary; lumped_mass: (n,) vertex weights summing to the
    area; stiffness: cotangent matrix with zero row sums.
    """

    spec: DomainSpec
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray
    lumped_mass: np.ndarray = field(init=False)
    stiffness: sp.csr_matrix = field(init=False)
    tri_areas: np.ndarray = field(init=False)
    area_total: float = field(init=False)
    basis_grads: np.ndarray = field(init=False)  # (m, 3, 2) P1 shape gradients
    is_m_matrix: bool = field(init=False)

    def __post_init__(self) -> None:
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_loop = np.asarray(self.boundary_loop, dtype=np.int64)
        self._assemble()
        self._validate()

    def _assemble(self) -> None:
        v = self.vertices
        t = self.triangles
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        e0 = p2 - p1  # edge opposite vertex 0
        e1 = p0 - p2
        e2 = p1 - p0
        cross = e2[:, 0] * (-e1[:, 1]) - e2[:, 1] * (-e1[:, 0])
        area = 0.5 * cross
        if np.any(area <= 0):
            raise MeshError(
                f"{np.count_nonzero(area <= 0)} non-positive triangle areas"
            )
        self.tri_areas = area
        self.area_total = float(area.sum())

        # lumped mass: one third of each incident triangle area
        mass = np.zeros(len(v))
        np.add.at(mass, t.ravel(), np.repeat(area / 3.0, 3))
        self.lumped_mass = mass

        # P1 shape-function gradients: grad phi_i = rot90(e_i) / (2 area)
        def rot(e):
            return np.stack([-e[:, 1], e[:, 0]], axis=1)

        g = np.stack([rot(e0), rot(e1), rot(e2)], axis=1) / (2 * area)[:, None, None]
        self.basis_grads = g

        # cotangent stiffness: A_ij = sum_T area_T * grad phi_i . grad phi_j
        rows, cols, vals = [], [], []
        for i in range(3):
            for j in range(3):
                rows.append(t[:, i])
                cols.append(t[:, j])
                vals.append(area * np.einsum("td,td->t", g[:, i], g[:, j]))
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(v), len(v)),
        ).tocsr()
        A.sum_duplicates()
        self.stiffness = A

        off = A.copy()
        off.setdiag(0.0)
        self.is_m_matrix = bool(off.data.max(initial=0.0) <= 1e-12)

    def _validate(self) -> None:
        if abs(self.lumped_mass.sum() - self.area_total) > 1e-12 * self.area_total:
            raise MeshError("lumped mass does not sum to the total area")
        row_sums = np.abs(np.asarray(self.stiffness.sum(axis=1))).max()
        if row_sums > 1e-10:
            raise MeshError(f"stiffness row sums not zero (max {row_sums:.3e})")

    # ---- helpers -------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def checksum(self) -> str:
        hasher = hashlib.sha256()
        hasher.update(np.round(self.vertices, 12).tobytes())
        hasher.update(self.triangles.tobytes())
        return hasher.hexdigest()[:16]

    def p1_gradient(self, u: np.ndarray) -> np.ndarray:
        """Per-triangle constant gradient of the P1 interpolant of nodal u."""
        return np.einsum("tid,ti->td", self.basis_grads, u[self.triangles])

    def tri_average(self, u: np.ndarray) -> np.ndarray:
        """Arithmetic mean of the three nodal values on each triangle."""
        return u[self.triangles].mean(axis=1)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (n_e, 2) index array."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def max_edge_length(self) -> float:
        e = self.edges()
        d = np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)
        return float(d.max())

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "checksum": self.checksum,
            "area_total": self.area_total,
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_loop": self.boundary_loop.tolist(),
        }


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def load_domain_spec(path) -> DomainSpec:
    """Read a domain spec from a flat JSON document."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ValidationError(f"{path}: not a domain spec (missing 'kind')")
    by_kind = {
        "rectangle": {"kind", "h", "width", "height"},
        "polar_star": {"kind", "h", "r0", "a", "k"},
    }
    allowed = by_kind.get(raw["kind"], set.union(*by_kind.values()))
    unknown = set(raw) - allowed
    if unknown:
        raise ValidationError(
            f"{path}: fields {sorted(unknown)} not valid for kind {raw['kind']!r}"
        )
    try:
        spec = DomainSpec(**raw)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    spec.validate()
    return spec


def build_mesh(spec: DomainSpec) -> TriMesh:
    """Triangulate the domain with target edge length spec.h."""
    spec.validate()
    if spec.kind == "rectangle":
        mesh = _build_rectangle(spec)
    else:
        mesh = _build_polar_star(spec)
    if mesh.max_edge_length() > 1.5 * spec.h:
        raise MeshError(
            f"max edge {mesh.max_edge_length():.4g} exceeds 1.5*h = {1.5 * spec.h:.4g}"
        )
    return mesh


def _build_rectangle(spec: DomainSpec) -> TriMesh:
    nx = max(2, int(np.ceil(spec.width / spec.h)))
    ny = max(2, int(np.ceil(spec.height / spec.h)))
    xs = np.linspace(0.0, spec.width, nx + 1)
    ys = np.linspace(0.0, spec.height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            # one split direction everywhere: the diagonal edges carry zero
            # cotangent weight, so the stiffness reduces to the 5-point
            # stencil, and every interior vertex gets the same lumped mass
            # (alternating splits give a checkerboard of vertex masses that
            # aliases into point-cloud transport at kernel scale)
            tris.append((a, b, c))
            tris.append((a, c, d))
    tris = np.array(tris, dtype=np.int64)

    loop = (
        [vid(i, 0) for i in range(nx)]
        + [vid(nx, j) for j in range(ny)]
        + [vid(i, ny) for i in range(nx, 0, -1)]
        + [vid(0, j) for j in range(ny, 0, -1)]
    )
    return TriMesh(spec, verts, tris, np.array(loop))


def _boundary_samples(spec: DomainSpec, spacing: float) -> np.ndarray:
    """Equal-arclength sample angles along the star boundary."""
    fine = np.linspace(0.0, 2 * np.pi, 200_000, endpoint=True)
    p = spec.boundary_point(fine)
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    n = max(8, int(round(total / spacing)))
    targets = np.linspace(0.0, total, n, endpoint=False)
    return np.interp(targets, s, fine)


def _build_polar_star(spec: DomainSpec) -> TriMesh:
    h = spec.h
    theta_b = _boundary_samples(spec, h)
    bpts = spec.boundary_point(theta_b)
    nb = len(bpts)

    # fine polyline for distance-to-boundary queries
    fine = spec.boundary_point(np.linspace(0, 2 * np.pi, 16 * nb, endpoint=False))
    btree = cKDTree(fine)

    # hex lattice covering the bounding box
    rmax = spec.r0 + spec.a
    dx = h
    dy = h * np.sqrt(3) / 2
    ny = int(np.ceil(2 * rmax / dy)) + 2
    nx = int(np.ceil(2 * rmax / dx)) + 2
    pts = []
    for j in range(ny):
        y = -rmax + j * dy
        off = 0.5 * dx if j % 2 else 0.0
        x = -rmax + off + np.arange(nx) * dx
        pts.append(np.stack([x, np.full(nx, y)], axis=1))
    lattice = np.concatenate(pts)
    inside = spec.contains(lattice)
    lattice = lattice[inside]
    d_b, _ = btree.query(lattice)
    lattice = lattice[d_b > 0.55 * h]

    points = np.concatenate([bpts, lattice])

    # Laplacian smoothing of the interior (boundary stays pinned)
    for _ in range(6):
        tri = Delaunay(points)
        simps = _inside_triangles(spec, points, tri.simplices)
        nbr_sum = np.zeros_like(points)
        nbr_cnt = np.zeros(len(points))
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                np.add.at(nbr_sum, simps[:, i], points[simps[:, j]])
                np.add.at(nbr_cnt, simps[:, i], 1.0)
        mask = np.zeros(len(points), dtype=bool)
        mask[nb:] = nbr_cnt[nb:] > 0
        points[mask] = nbr_sum[mask] / nbr_cnt[mask][:, None]
        ok = spec.contains(points[nb:])
        d_b, _ = btree.query(points[nb:])
        keep = np.concatenate([np.ones(nb, dtype=bool), ok & (d_b > 0.5 * h)])
        points = points[keep]

    tri = Delaunay(points)
    simps = _inside_triangles(spec, points, tri.simplices)
    used = np.unique(simps)
    if len(used) < len(points):
        remap = -np.ones(len(points), dtype=np.int64)
        remap[used] = np.arange(len(used))
        if np.any(remap[:nb] < 0):
            raise MeshError("a boundary sample vertex ended up unused")
        points = points[used]
        simps = remap[simps]
    simps = _orient_ccw(points, simps)
    loop = _extract_boundary_loop(points, simps)
    return TriMesh(spec, points, simps, loop)


def _inside_triangles(spec: DomainSpec, pts: np.ndarray, simps: np.ndarray) -> np.ndarray:
    cent = pts[simps].mean(axis=1)
    keep = spec.contains(cent)
    # drop degenerate slivers as well
    p = pts[simps]
    area = 0.5 * np.abs(
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    keep &= area > 1e-12 * spec.h**2
    return simps[keep]


def _orient_ccw(pts: np.ndarray, simps: np.ndarray) -> np.ndarray:
    p = pts[simps]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cross < 0
    simps = simps.copy()
    simps[flip] = simps[flip][:, [0, 2, 1]]
    return simps


def _extract_boundary_loop(pts: np.ndarray, simps: np.ndarray) -> np.ndarray:
    e = np.concatenate([simps[:, [0, 1]], simps[:, [1, 2]], simps[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    bnd = e[cnt[inv] == 1]
    if len(bnd) == 0:
        raise MeshError("mesh has no boundary edges")
    nxt = dict(bnd)  # CCW triangles orient boundary edges consistently
    start = int(bnd[0, 0])
    loop = [start]
    cur = int(nxt[start])
    while cur != start:
        loop.append(cur)
        if cur not in nxt or len(loop) > len(bnd):
            raise MeshError("boundary edges do not form a single closed loop")
        cur = int(nxt[cur])
    if len(loop) != len(bnd):
        raise MeshError("boundary has more than one connected loop")
    return np.array(loop, dtype=np.int64)


# ---------------------------------------------------------------------------
# curvature and geodesics
# ---------------------------------------------------------------------------


def boundary_curvature(spec: DomainSpec, n_samples: int = 4096) -> CurvatureBound:
    """Signed-curvature lower bound of the boundary (K = 0 on flat domains)."""
    spec.validate()
    if spec.kind == "rectangle":
        return CurvatureBound(S=0.0, K=0.0, kappa_min=0.0, theta_at_min=0.0)
    if n_samples < 1024:
        raise ValidationError("n_samples must be >= 1024 for polar_star")
    theta = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    kappa = _polar_curvature(spec, theta)
    kmin = kappa.min()
    # symmetric stars hit the minimum k times; report the earliest angle.
    # the tolerance absorbs O(dtheta^2) sampling offsets between the copies
    # (grid points rarely land on every symmetric minimum simultaneously)
    near = np.flatnonzero(kappa <= kmin + 1e-3 * (1 + abs(kmin)))
    i = int(near[0])
    # 3-point parabolic refinement around the sampled minimum
    tm, t0, tp = theta[(i - 1) % n_samples], theta[i], theta[(i + 1) % n_samples]
    if tm > t0:
        tm -= 2 * np.pi
    if tp < t0:
        tp += 2 * np.pi
    km, k0, kp = kappa[(i - 1) % n_samples], kappa[i], kappa[(i + 1) % n_samples]
    denom = km - 2 * k0 + kp
    if abs(denom) > 1e-14:
        dt = theta[1] - theta[0]
        shift = 0.5 * (km - kp) / denom * dt
        t_star = t0 + shift
        k_star = float(_polar_curvature(spec, np.array([t_star]))[0])
        if k_star < k0:
            t0, k0 = t_star, k_star
    kappa_min = float(k0)
    return CurvatureBound(
        S=max(0.0, -kappa_min), K=0.0, kappa_min=kappa_min, theta_at_min=float(t0)
    )


def _polar_curvature(spec: DomainSpec, theta: np.ndarray) -> np.ndarray:
    r = spec.radius(theta)
    r1 = spec.radius_d1(theta)
    r2 = spec.radius_d2(theta)
    return (r**2 + 2 * r1**2 - r * r2) / (r**2 + r1**2) ** 1.5


def geodesic_distances(mesh: TriMesh, sources) -> np.ndarray:
    """Dijkstra distances on the edge + adjacent-triangle-diagonal graph."""
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    g = _geodesic_graph(mesh)
    d = _dijkstra(g, directed=False, indices=sources)
    if np.any(np.isinf(d)):
        raise MeshError("mesh graph is disconnected")
    return d


def _geodesic_graph(mesh: TriMesh) -> sp.csr_matrix:
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    opp = np.concatenate([t[:, 2], t[:, 0], t[:, 1]])
    key = np.sort(e, axis=1)
    order = np.lexsort((key[:, 1], key[:, 0]))
    key_s, opp_s = key[order], opp[order]
    same = np.all(key_s[:-1] == key_s[1:], axis=1)
    # diagonal across each interior edge: the two opposite vertices
    diag = np.stack([opp_s[:-1][same], opp_s[1:][same]], axis=1)
    pairs = np.concatenate([key, np.sort(diag, axis=1)])
    pairs = np.unique(pairs, axis=0)
    w = np.linalg.norm(
        mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1
    )
    n = mesh.n_vertices
    g = sp.coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return g.tocsr()
