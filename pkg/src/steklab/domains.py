"""Distinguished domains and their geometric functionals.

Covers the eccentricity coefficients of curvature-balanced geodesic
ellipsoids, metric volumes, volume-matched geodesic radii, boundary
centroids (intrinsic first-moment zeros), weighted boundary moments,
symmetric differences against the unit ball, and the quantitative
isoperimetric deficit sweep for planar star domains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .geometry import (CurvaturePacket, InjectivityRangeError, MetricChart,
                       ModelManifold, NumericError, NormalFrame)
from .meshing import SimplicialMesh, cell_volumes
from .steklov import boundary_quadrature


@dataclass(frozen=True)
class GeodesicEllipsoidSpec:
    """Base point, scale, eccentricities and diagonalizing frame of a
    curvature-balanced geodesic ellipsoid."""

    base_point: np.ndarray
    r: float
    b: np.ndarray
    frame: NormalFrame

    def __post_init__(self):
        if abs(float(np.sum(self.b))) > 1e-12:
            raise ValueError("eccentricity coefficients must sum to zero")


@dataclass(frozen=True)
class DomainGeometry:
    """Scalar geometric functionals of a domain."""

    volume: float
    boundary_measure: float
    weighted_moment: float
    sym_diff_vs_ball: float


def ellipsoid_coefficients(cp: CurvaturePacket) -> np.ndarray:
    """Eccentricities b_i = (R_ii - S/N) / (3 (N+2)) in a Ricci-diagonal
    frame; they sum to zero because the scalar curvature is the Ricci trace."""
    N = cp.dim
    diag = np.diag(cp.ricci)
    return (diag - cp.scalar / N) / (3.0 * (N + 2))


def ellipsoid_spec(m: ModelManifold, y0, r: float) -> GeodesicEllipsoidSpec:
    """Bundle the curvature-balanced ellipsoid data at a point: Ricci-diagonal
    frame, eccentricities in that frame, and the scale."""
    from .geometry import ricci_frame
    y0 = np.asarray(y0, dtype=float)
    cp = m.curvature(y0)
    nf = ricci_frame(cp)
    # re-express Ricci in the diagonal frame before reading the diagonal
    E, F = cp.frame, nf.frame
    Q = np.array([[m.metric_dot(y0, F[i], E[a]) for a in range(E.shape[0])]
                  for i in range(F.shape[0])])
    ricci_diag = Q @ cp.ricci @ Q.T
    b = (np.diag(ricci_diag) - cp.scalar / m.dim) / (3.0 * (m.dim + 2))
    return GeodesicEllipsoidSpec(y0, float(r), b, nf)


def volume_of(chart: MetricChart, mesh: SimplicialMesh) -> float:
    """Metric volume: cellwise centroid quadrature of sqrt(det g)."""
    chart.require_inside(mesh.vertices)
    centroids = mesh.vertices[mesh.cells].mean(axis=1)
    w = chart.sqrt_det(centroids)
    return float(np.sum(cell_volumes(mesh) * w))


def boundary_measure_of(chart: MetricChart, mesh: SimplicialMesh) -> float:
    """Metric boundary measure via the facet quadrature."""
    chart.require_inside(mesh.vertices)
    _, weights, _ = boundary_quadrature(mesh, chart)
    return float(weights.sum())


def weighted_boundary_moment(chart: MetricChart, mesh: SimplicialMesh) -> float:
    """Facet quadrature of |x|^2 against the metric boundary measure."""
    chart.require_inside(mesh.vertices)
    pts, weights, _ = boundary_quadrature(mesh, chart)
    r2 = np.einsum("nqd,nqd->nq", pts, pts)
    return float(np.sum(weights * r2))


def matched_radius(m: ModelManifold, y0: np.ndarray, target_volume: float,
                   r_max: Optional[float] = None, rel_tol: float = 1e-10) -> float:
    """Geodesic-ball radius whose metric volume equals the target.

    Monotone bisection on r -> |B_g(y0, r)|; the closed-form (or quadrature)
    ball volumes of the manifold catalog are used, never the series
    expansion under test.
    """
    if target_volume <= 0.0:
        raise InjectivityRangeError("target volume must be positive")
    inj = m.injectivity_radius(np.asarray(y0, dtype=float))
    hi = r_max if r_max is not None else (0.999 * inj if np.isfinite(inj) else 16.0)
    if m.geodesic_ball_volume(y0, hi) < target_volume:
        raise InjectivityRangeError(
            f"target volume {target_volume:.6g} unreachable below radius {hi:.6g}")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if m.geodesic_ball_volume(y0, mid) < target_volume:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# boundary centroid
# ---------------------------------------------------------------------------

def boundary_centroid(m: ModelManifold, points: np.ndarray, weights: np.ndarray,
                      max_iter: int = 500, rel_tol: float = 1e-8):
    """Point at which the weighted boundary first moment of Exp^{-1} vanishes.

    Fixed-step gradient descent on J(p) = sum w_i dist(p, q_i)^2 with step
    1/(2 sigma); the descent update is the weighted Karcher-mean step
    p <- Exp_p(mean of log_p(q_i)).  Initialized at the projected extrinsic
    average pushed through one log/exp round.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    sigma = float(weights.sum())
    if sigma <= 0:
        raise ValueError("weights must have positive total mass")

    p = m.project(np.einsum("i,ij->j", weights, points) / sigma)

    def first_moment(p):
        return sum(w * m.log(p, q) for w, q in zip(weights, points))

    p = m.exp(p, first_moment(p) / sigma)
    residual = m.norm(p, first_moment(p))
    for _ in range(max_iter):
        mom = first_moment(p)
        residual = m.norm(p, mom)
        if residual <= rel_tol * sigma:
            return p, residual
        p = m.exp(p, mom / sigma)
    raise NumericError(
        f"centroid iteration did not converge; last first-moment norm {residual:.3e} "
        f"against tolerance {rel_tol * sigma:.3e}")


# ---------------------------------------------------------------------------
# planar star domains (smooth description)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierStar:
    """Star-shaped planar domain r(theta) = r0 (1 + sum a_k cos + b_k sin).

    ``cos_coeffs[k]``/``sin_coeffs[k]`` carry the mode-k amplitudes for
    k >= 2 (index 0 and 1 entries are ignored and should be zero).
    """

    r0: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    @staticmethod
    def from_modes(modes: dict, r0: float = 1.0) -> "FourierStar":
        kmax = max(modes) if modes else 1
        a = np.zeros(kmax + 1)
        b = np.zeros(kmax + 1)
        for k, (ak, bk) in modes.items():
            a[k], b[k] = ak, bk
        return FourierStar(r0, a, b)

    def radius(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.ones_like(theta)
        for k in range(2, self.cos_coeffs.size):
            out = out + self.cos_coeffs[k] * np.cos(k * theta)
        for k in range(2, self.sin_coeffs.size):
            out = out + self.sin_coeffs[k] * np.sin(k * theta)
        return self.r0 * out

    def dradius(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for k in range(2, self.cos_coeffs.size):
            out = out - k * self.cos_coeffs[k] * np.sin(k * theta)
        for k in range(2, self.sin_coeffs.size):
            out = out + k * self.sin_coeffs[k] * np.cos(k * theta)
        return self.r0 * out

    def total_amplitude(self) -> float:
        return float(np.sum(np.abs(self.cos_coeffs[2:])) + np.sum(np.abs(self.sin_coeffs[2:])))

    def area(self) -> float:
        return star_area(self.radius)

    def normalized(self, target_area: float = np.pi) -> "FourierStar":
        lam = np.sqrt(target_area / self.area())
        return FourierStar(self.r0 * lam, self.cos_coeffs.copy(), self.sin_coeffs.copy())

    def boundary_moment(self) -> float:
        return star_boundary_moment(self.radius, self.dradius)

    def symmetric_difference_unit_ball(self) -> float:
        return _symmetric_difference_radial(self.radius)


def star_area(radius_fn) -> float:
    """Euclidean area of a smooth star domain: 0.5 int r(theta)^2 d theta."""
    th, w = _theta_panels()
    r = np.asarray(radius_fn(th), dtype=float)
    return float(0.5 * np.sum(w * r * r))


def star_boundary_moment(radius_fn, dradius_fn) -> float:
    """Euclidean boundary integral of |x|^2: int r^2 sqrt(r^2 + r'^2) d theta."""
    th, w = _theta_panels()
    r = np.asarray(radius_fn(th), dtype=float)
    dr = np.asarray(dradius_fn(th), dtype=float)
    return float(np.sum(w * r * r * np.sqrt(r * r + dr * dr)))


_PANEL_CACHE = {}


def _theta_panels(n_panels: int = 256, order: int = 10):
    """Composite Gauss-Legendre nodes/weights on [0, 2 pi)."""
    key = (n_panels, order)
    if key not in _PANEL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, 2.0 * np.pi, n_panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        _PANEL_CACHE[key] = (nodes, weights)
    return _PANEL_CACHE[key]


def _crossing_angles(radius_fn, n_scan: int = 4096):
    """Angles where radius_fn(theta) = 1, found by sign-scan plus brentq."""
    th = np.linspace(0.0, 2.0 * np.pi, n_scan + 1)
    vals = np.asarray(radius_fn(th), dtype=float) - 1.0
    roots = []
    for i in range(n_scan):
        if vals[i] == 0.0:
            roots.append(th[i])
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(brentq(lambda t: float(radius_fn(t)) - 1.0, th[i], th[i + 1],
                                xtol=1e-14))
    return sorted(roots)


def _symmetric_difference_radial(radius_fn) -> float:
    """Integrate 0.5 |r(theta)^2 - 1| d theta exactly over smooth pieces."""
    roots = _crossing_angles(radius_fn)
    breakpoints = [0.0] + [r for r in roots if 0.0 < r < 2.0 * np.pi] + [2.0 * np.pi]
    x, w = np.polynomial.legendre.leggauss(24)
    total = 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b - a < 1e-15:
            continue
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        th = mid + half * x
        r = np.asarray(radius_fn(th), dtype=float)
        total += half * float(np.sum(w * 0.5 * np.abs(r * r - 1.0)))
    return total


def _mesh_boundary_radial_fn(mesh: SimplicialMesh):
    """Piecewise-chord polar radius of a star mesh boundary polygon."""
    V = mesh.vertices
    idx = mesh.boundary_vertex_indices()
    pts = V[idx]
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    order = np.argsort(theta, kind="stable")
    pts = pts[order]
    theta = theta[order]
    if np.any(np.diff(theta) <= 0):
        raise ValueError("mesh boundary is not star-shaped about the origin")

    thext = np.concatenate([theta, [theta[0] + 2.0 * np.pi]])
    ptsext = np.vstack([pts, pts[:1]])

    def radius(t):
        t = np.mod(np.asarray(t, dtype=float), 2.0 * np.pi)
        t = np.where(t < theta[0], t + 2.0 * np.pi, t)
        j = np.clip(np.searchsorted(thext, t, side="right") - 1, 0, len(theta) - 1)
        a = ptsext[j]
        b = ptsext[j + 1]
        # polar form of the chord between boundary vertices a and b
        ra = np.linalg.norm(a, axis=-1)
        rb = np.linalg.norm(b, axis=-1)
        ta = thext[j]
        tb = thext[j + 1]
        num = ra * rb * np.sin(tb - ta)
        den = rb * np.sin(tb - t) + ra * np.sin(t - ta)
        return num / den

    return radius


def symmetric_difference(mesh_U, reference_radius: float = 1.0,
                         n_samples: int = 1_000_000, seed: int = 0):
    """Lebesgue measure of the symmetric difference against the unit ball.

    Planar star meshes (or radius callables) use the exact polar integral;
    three-dimensional star meshes use Monte Carlo sampling and also return
    the standard error.
    """
    if reference_radius != 1.0:
        raise ValueError("only the unit reference ball is supported")
    if callable(mesh_U):
        return _symmetric_difference_radial(mesh_U)
    mesh = mesh_U
    if mesh.dim == 2:
        return _symmetric_difference_radial(_mesh_boundary_radial_fn(mesh))
    return _symmetric_difference_mc_3d(mesh, n_samples, seed)


def _symmetric_difference_mc_3d(mesh: SimplicialMesh, n_samples: int, seed: int):
    """Monte Carlo |U triangle B| for a star-shaped tet mesh about the origin."""
    rng = np.random.default_rng(seed)
    V, C = mesh.vertices, mesh.cells
    rmax = float(np.linalg.norm(V, axis=1).max()) * 1.0000001
    box = max(rmax, 1.0)
    pts = rng.uniform(-box, box, size=(n_samples, 3))

    # radial membership test against the boundary triangles: a point is in U
    # iff |x| <= boundary radius along x/|x|; resolve by ray casting against
    # every boundary facet (vectorized over facets in chunks)
    r = np.linalg.norm(pts, axis=1)
    keep = r > 0
    dirs = pts[keep] / r[keep, None]
    F = mesh.boundary_facets
    A, B, Cc = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    radial = np.full(dirs.shape[0], np.nan)
    chunk = 200_000 if dirs.shape[0] > 200_000 else dirs.shape[0]
    for start in range(0, dirs.shape[0], chunk):
        d = dirs[start:start + chunk]
        rad = _ray_boundary_radius(d, A, B, Cc)
        radial[start:start + chunk] = rad
    in_U = r[keep] <= radial
    in_B = r[keep] <= 1.0
    sym = in_U ^ in_B
    vol_box = (2.0 * box) ** 3
    p = sym.mean()
    est = p * vol_box
    stderr = vol_box * np.sqrt(p * (1.0 - p) / sym.size)
    return est, stderr


def _ray_boundary_radius(dirs, A, B, C):
    """Distance from the origin to the star boundary along each direction."""
    # Moeller-Trumbore with ray origin 0: solve t d = A + u (B-A) + v (C-A)
    e1 = B - A
    e2 = C - A
    out = np.full(dirs.shape[0], np.inf)
    pvec = np.cross(dirs[:, None, :], e2[None, :, :])
    det = np.einsum("nfd,fd->nf", pvec, e1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = -A[None, :, :]
        u = np.einsum("nfd,nfd->nf", tvec, pvec) * inv
        qvec = np.cross(tvec, e1[None, :, :])
        v = np.einsum("nd,nfd->nf", dirs, qvec) * inv
        t = np.einsum("fd,nfd->nf", e2, qvec) * inv
    hit = (np.abs(det) > 1e-14) & (u >= -1e-12) & (v >= -1e-12) & \
        (u + v <= 1.0 + 1e-12) & (t > 0)
    t = np.where(hit, t, np.inf)
    out = t.min(axis=1)
    return out


# ---------------------------------------------------------------------------
# quantitative isoperimetric sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeficitRow:
    amplitude: float
    deficit: float          # |U triangle B| / |U|
    moment_excess: float    # boundary moment minus N |B|


def isoperimetric_deficit_check(shape: Callable[[np.ndarray], np.ndarray],
                                amplitudes: Sequence[float]):
    """Sweep a star family r_a(theta) = 1 + a * shape(theta), volume
    normalized, and tabulate (symmetric-difference deficit, boundary-moment
    excess) with a log-log slope fit of excess against deficit.

    Both columns are computed by smooth polar quadrature; the excess is
    nonnegative up to quadrature slack and scales quadratically with the
    deficit for small amplitudes.
    """
    rows = []
    for a in amplitudes:
        if a == 0.0:
            rows.append(DeficitRow(0.0, 0.0, 0.0))
            continue
        deficit, excess = normalized_deficit_pair(
            lambda t, a=a: 1.0 + a * np.asarray(shape(t), dtype=float))
        rows.append(DeficitRow(float(a), deficit, excess))
    slope = deficit_slope(rows)
    return rows, slope


def normalized_deficit_pair(radius_fn, dradius_fn=None):
    """(symmetric-difference deficit, boundary-moment excess) of the
    area-normalized copy of a smooth star domain."""
    lam = np.sqrt(np.pi / star_area(radius_fn))
    radius = lambda t: lam * np.asarray(radius_fn(t), dtype=float)
    if dradius_fn is None:
        h = 1e-6
        dradius = lambda t: (radius(np.asarray(t, dtype=float) + h)
                             - radius(np.asarray(t, dtype=float) - h)) / (2.0 * h)
    else:
        dradius = lambda t: lam * np.asarray(dradius_fn(t), dtype=float)
    deficit = _symmetric_difference_radial(radius) / np.pi
    excess = star_boundary_moment(radius, dradius) - 2.0 * np.pi
    return float(deficit), float(excess)


def deficit_slope(rows: Sequence[DeficitRow]) -> float:
    """Least-squares slope of log(excess) against log(deficit)."""
    pts = [(r.deficit, r.moment_excess) for r in rows if r.deficit > 0 and r.moment_excess > 0]
    if len(pts) < 2:
        return float("nan")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[1])


def divergence_identity_mismatch(chart: MetricChart, mesh: SimplicialMesh) -> float:
    """|int_B div_g(|x| x) dv_g - sigma_g(boundary)| via centroid quadrature.

    The outward metric normal of the unit sphere in a pullback ball chart is
    the radial direction, so the divergence theorem sends the vector field
    |x| x to the plain boundary measure.
    """
    chart.require_inside(mesh.vertices)
    centroids = mesh.vertices[mesh.cells].mean(axis=1)
    rho = np.linalg.norm(centroids, axis=1)
    W = chart.sqrt_det(centroids)
    GW = chart.grad_sqrt_det(centroids)
    N = mesh.dim
    div = (N + 1.0) * rho + rho * np.einsum("cd,cd->c", centroids, GW) / W
    integral = float(np.sum(cell_volumes(mesh) * W * div))
    return abs(integral - boundary_measure_of(chart, mesh))
