"""Model manifolds, curvature data, geodesic maps, and rescaled pullback metrics.

The catalog manifolds (flat space, round sphere, hyperbolic plane, S2 x R)
carry closed-form exponential maps and normal-coordinate metrics.  A custom
coordinate chart falls back on numerical integration of the geodesic and
Jacobi equations, and on finite differences of Christoffel symbols for
curvature.

Sign conventions.  The Riemann array is stored as
``riemann[i, j, k, l] = <R(E_i, E_j) E_k, E_l>`` in an orthonormal frame,
normalized so that the Ricci matrix is recovered by the contraction
``ricci[i, j] = -sum_k riemann[i, k, j, k]`` and a unit round sphere has
``ricci = identity``.  In this convention a space of constant sectional
curvature ``K`` has ``riemann[i, j, k, l] = -K (d_ik d_jl - d_il d_jk)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp


class ChartDomainError(ValueError):
    """A point lies outside the validity domain of a coordinate chart."""


class InjectivityRangeError(ValueError):
    """A geodesic quantity was requested beyond the injectivity bound."""


class NumericError(RuntimeError):
    """An iterative numeric routine failed; the message carries diagnostics."""


# Chart validity radius used for every rescaled pullback metric.  Radius 3
# hosts the enlarged balls needed by domain sweeps around the unit ball.
DEFAULT_DOMAIN_RADIUS = 3.0

# Step factor for finite-difference Christoffel symbols and their derivatives,
# relative to the chart domain radius.  Balances truncation against roundoff
# cancellation at double precision.
FD_STEP_FACTOR = 1e-4


# ---------------------------------------------------------------------------
# small scalar helpers (stable near zero)
# ---------------------------------------------------------------------------

def _sinc(a):
    """sin(a)/a with the correct limit at a = 0."""
    return np.sinc(np.asarray(a) / np.pi)


def _sinhc(a):
    """sinh(a)/a with the correct limit at a = 0."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 1e-4
    safe = np.where(small, 1.0, a)
    out = np.where(small, 1.0 + a * a / 6.0 + a**4 / 120.0, np.sinh(safe) / safe)
    return out


def _dsinc(a):
    """d/da [sin(a)/a], series-stabilized near a = 0."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 1e-4
    safe = np.where(small, 1.0, a)
    series = -a / 3.0 + a**3 / 30.0
    return np.where(small, series, (safe * np.cos(safe) - np.sin(safe)) / safe**2)


def _dsinhc(a):
    """d/da [sinh(a)/a], series-stabilized near a = 0."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 1e-4
    safe = np.where(small, 1.0, a)
    series = a / 3.0 + a**3 / 30.0
    return np.where(small, series, (safe * np.cosh(safe) - np.sinh(safe)) / safe**2)


def unit_ball_volume(dim: int) -> float:
    """Lebesgue volume of the Euclidean unit ball."""
    if dim == 2:
        return np.pi
    if dim == 3:
        return 4.0 * np.pi / 3.0
    raise ValueError(f"unsupported dimension {dim}")


# ---------------------------------------------------------------------------
# metric charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricChart:
    """A coordinate-domain metric field on ``|x| < domain_radius``.

    All callables broadcast over leading axes: ``g`` maps ``(..., dim)``
    points to ``(..., dim, dim)`` symmetric positive definite matrices,
    ``sqrt_det`` to ``(...,)`` and ``grad_sqrt_det`` to ``(..., dim)``.
    """

    dim: int
    domain_radius: float
    chart_id: str
    g: Callable[[np.ndarray], np.ndarray]
    g_inv: Callable[[np.ndarray], np.ndarray]
    sqrt_det: Callable[[np.ndarray], np.ndarray]
    grad_sqrt_det: Callable[[np.ndarray], np.ndarray]

    def require_inside(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        rmax = float(np.max(np.linalg.norm(np.atleast_2d(x), axis=-1)))
        if rmax >= self.domain_radius:
            raise ChartDomainError(
                f"point at radius {rmax:.6g} outside chart domain "
                f"(radius {self.domain_radius:.6g}) of {self.chart_id}"
            )


def identity_chart(dim: int, domain_radius: float = DEFAULT_DOMAIN_RADIUS) -> MetricChart:
    """The flat chart: g = identity everywhere."""

    def g(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] + (dim, dim)
        return np.broadcast_to(np.eye(dim), shape).copy()

    def sqrt_det(x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1])

    def grad_sqrt_det(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape)

    return MetricChart(dim, domain_radius, f"euclidean{dim}", g, g, sqrt_det, grad_sqrt_det)


def chart_from_g(dim: int, g_fn: Callable, domain_radius: float,
                 chart_id: str, fd_step: Optional[float] = None) -> MetricChart:
    """Wrap a bare metric function; inverse, determinant root and its gradient
    are derived numerically point by point."""
    h = fd_step if fd_step is not None else FD_STEP_FACTOR * domain_radius

    def g(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(g_fn(x), dtype=float)
        flat = x.reshape(-1, dim)
        out = np.stack([np.asarray(g_fn(p), dtype=float) for p in flat])
        return out.reshape(x.shape[:-1] + (dim, dim))

    def g_inv(x):
        return np.linalg.inv(g(x))

    def sqrt_det(x):
        return np.sqrt(np.linalg.det(g(x)))

    def grad_sqrt_det(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            out[..., i] = (sqrt_det(x + e) - sqrt_det(x - e)) / (2.0 * h)
        return out

    return MetricChart(dim, domain_radius, chart_id, g, g_inv, sqrt_det, grad_sqrt_det)


def _rotated(chart_inner, M: np.ndarray):
    """Compose batched matrix-valued callables with the frame rotation M."""
    g0, ginv0, sd0, gsd0 = chart_inner

    def rot(x):
        # y = M x applied along the last axis
        return np.asarray(x, dtype=float) @ M.T

    def g(x):
        return np.einsum("ai,...ab,bj->...ij", M, g0(rot(x)), M)

    def g_inv(x):
        return np.einsum("ai,...ab,bj->...ij", M, ginv0(rot(x)), M)

    def sqrt_det(x):
        return sd0(rot(x))

    def grad_sqrt_det(x):
        return np.einsum("ai,...a->...i", M, gsd0(rot(x)))

    return g, g_inv, sqrt_det, grad_sqrt_det


# ---------------------------------------------------------------------------
# curvature containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvaturePacket:
    """Curvature data at a base point, expressed in an orthonormal frame."""

    base_point: np.ndarray
    frame: np.ndarray          # (dim, point_dim) rows are the frame vectors
    riemann: np.ndarray        # (dim, dim, dim, dim)
    ricci: np.ndarray          # (dim, dim)
    scalar: float
    ricci_min: float

    @property
    def dim(self) -> int:
        return self.ricci.shape[0]


def _packet_from_riemann(base_point, frame, riemann) -> CurvaturePacket:
    """Contract the Riemann array to Ricci/scalar/min, enforcing the stored
    sign convention."""
    ricci = -np.einsum("ikjk->ij", riemann)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.trace(ricci))
    ricci_min = float(np.linalg.eigvalsh(ricci)[0])
    return CurvaturePacket(np.asarray(base_point, dtype=float), np.asarray(frame, dtype=float),
                           riemann, ricci, scalar, ricci_min)


def _constant_curvature_riemann(dim: int, K: float) -> np.ndarray:
    eye = np.eye(dim)
    return -K * (np.einsum("ik,jl->ijkl", eye, eye) - np.einsum("il,jk->ijkl", eye, eye))


@dataclass(frozen=True)
class NormalFrame:
    """An orthonormal frame diagonalizing the Ricci matrix.

    Eigenvalues are sorted in descending order with stable ties; each frame
    vector is sign-normalized so its first nonzero coefficient (in the
    packet frame it was derived from) is positive.
    """

    frame: np.ndarray              # (dim, point_dim)
    ricci_eigenvalues: np.ndarray  # (dim,) descending


# ---------------------------------------------------------------------------
# model manifolds
# ---------------------------------------------------------------------------

class ModelManifold:
    """Base interface shared by the manifold catalog.

    Points and tangent vectors are plain numpy arrays; their length depends
    on the representation (embedding coordinates for the curved catalogs,
    chart coordinates for custom charts).
    """

    dim: int
    kind: str

    def tag(self) -> str:
        """Identifier embedding the catalog parameters, used in chart ids."""
        return self.kind

    # -- representation ----------------------------------------------------
    def base_point(self) -> np.ndarray:
        """A canonical point usable as a default expansion center."""
        raise NotImplementedError

    def frame(self, p: np.ndarray) -> np.ndarray:
        """Deterministic orthonormal tangent frame at p, rows = vectors."""
        raise NotImplementedError

    def metric_dot(self, p, u, v) -> float:
        raise NotImplementedError

    def norm(self, p, v) -> float:
        return float(np.sqrt(max(self.metric_dot(p, v, v), 0.0)))

    def injectivity_radius(self, p) -> float:
        raise NotImplementedError

    def project(self, ambient: np.ndarray) -> np.ndarray:
        """Project an ambient/coordinate average back onto the manifold."""
        raise NotImplementedError

    # -- geodesics ----------------------------------------------------------
    def exp(self, p, v) -> np.ndarray:
        raise NotImplementedError

    def log(self, p, q) -> np.ndarray:
        raise NotImplementedError

    def distance(self, p, q) -> float:
        return self.norm(p, self.log(p, q))

    # -- curvature and normal-coordinate metric -----------------------------
    def curvature(self, p) -> CurvaturePacket:
        raise NotImplementedError

    def normal_metric(self, y0):
        """Callables (g, g_inv, sqrt_det, grad_sqrt_det) of the metric in
        normal coordinates at y0 w.r.t. the canonical frame ``self.frame(y0)``."""
        raise NotImplementedError

    def geodesic_ball_volume(self, y0, r: float) -> float:
        raise NotImplementedError


# -- flat space --------------------------------------------------------------

@dataclass(frozen=True)
class Euclidean(ModelManifold):
    dim: int = 2
    kind: str = "euclidean"

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    def tag(self):
        return f"euclidean{self.dim}"

    def base_point(self):
        return np.zeros(self.dim)

    def frame(self, p):
        return np.eye(self.dim)

    def metric_dot(self, p, u, v):
        return float(np.dot(u, v))

    def injectivity_radius(self, p):
        return np.inf

    def project(self, ambient):
        return np.asarray(ambient, dtype=float)

    def exp(self, p, v):
        return np.asarray(p, dtype=float) + np.asarray(v, dtype=float)

    def log(self, p, q):
        return np.asarray(q, dtype=float) - np.asarray(p, dtype=float)

    def curvature(self, p):
        riemann = np.zeros((self.dim,) * 4)
        return _packet_from_riemann(p, self.frame(p), riemann)

    def normal_metric(self, y0):
        ch = identity_chart(self.dim)
        return ch.g, ch.g_inv, ch.sqrt_det, ch.grad_sqrt_det

    def geodesic_ball_volume(self, y0, r):
        return unit_ball_volume(self.dim) * r**self.dim


# -- radially symmetric curved surfaces (sphere / hyperbolic) ----------------

def _radial_normal_metric(dim, tau_fn, dtau_fn):
    """Normal-coordinate metric with radial coefficient 1 and tangential
    coefficient tau(|x|); sqrt(det) = tau^{(dim-1)/2}."""

    def split(x):
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x, axis=-1)
        return x, rho

    def g(x):
        x, rho = split(x)
        tau = tau_fn(rho)
        safe = np.where(rho == 0.0, 1.0, rho)
        xh = x / safe[..., None]
        proj = np.einsum("...i,...j->...ij", xh, xh)
        eye = np.eye(dim)
        return eye + (tau - 1.0)[..., None, None] * (eye - proj)

    def g_inv(x):
        x, rho = split(x)
        tau = tau_fn(rho)
        safe = np.where(rho == 0.0, 1.0, rho)
        xh = x / safe[..., None]
        proj = np.einsum("...i,...j->...ij", xh, xh)
        eye = np.eye(dim)
        return eye + (1.0 / tau - 1.0)[..., None, None] * (eye - proj)

    def sqrt_det(x):
        _, rho = split(x)
        return tau_fn(rho) ** (0.5 * (dim - 1))

    def grad_sqrt_det(x):
        x, rho = split(x)
        tau = tau_fn(rho)
        dtau = dtau_fn(rho)
        # d/drho tau^{p} = p tau^{p-1} dtau, radial direction x/rho
        p = 0.5 * (dim - 1)
        dfac = p * tau ** (p - 1.0) * dtau
        safe = np.where(rho == 0.0, 1.0, rho)
        return dfac[..., None] * x / safe[..., None]

    return g, g_inv, sqrt_det, grad_sqrt_det


@dataclass(frozen=True)
class Sphere(ModelManifold):
    """Round 2-sphere of radius R, embedded in R^3."""

    radius: float = 1.0
    dim: int = 2
    kind: str = "sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.dim != 2:
            raise ValueError("only the 2-sphere is cataloged")

    def tag(self):
        return f"sphere(R={self.radius!r})"

    def base_point(self):
        return np.array([0.0, 0.0, self.radius])

    def frame(self, p):
        p = np.asarray(p, dtype=float)
        n = p / np.linalg.norm(p)
        # least-aligned canonical axis keeps the construction deterministic
        k = int(np.argmin(np.abs(n)))
        e1 = np.zeros(3)
        e1[k] = 1.0
        e1 = e1 - np.dot(e1, n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return np.vstack([e1, e2])

    def metric_dot(self, p, u, v):
        return float(np.dot(u, v))

    def injectivity_radius(self, p):
        return np.pi * self.radius

    def project(self, ambient):
        a = np.asarray(ambient, dtype=float)
        n = np.linalg.norm(a)
        if n == 0.0:
            raise NumericError("cannot project the origin onto the sphere")
        return self.radius * a / n

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv >= self.injectivity_radius(p):
            raise InjectivityRangeError(
                f"|v| = {nv:.6g} exceeds injectivity bound {np.pi * self.radius:.6g}")
        if nv == 0.0:
            return p.copy()
        t = nv / self.radius
        return np.cos(t) * p + self.radius * np.sin(t) * (v / nv)

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        R = self.radius
        c = np.clip(np.dot(p, q) / R**2, -1.0, 1.0)
        theta = np.arccos(c)
        d = R * theta
        if d >= self.injectivity_radius(p):
            raise InjectivityRangeError("log undefined at or beyond the antipode")
        if theta == 0.0:
            return np.zeros(3)
        u = q - c * p
        nu = np.linalg.norm(u)
        if nu == 0.0:
            raise InjectivityRangeError("log undefined at or beyond the antipode")
        return d * u / nu

    def curvature(self, p):
        K = 1.0 / self.radius**2
        return _packet_from_riemann(p, self.frame(p), _constant_curvature_riemann(2, K))

    def normal_metric(self, y0):
        R = self.radius
        tau = lambda rho: _sinc(rho / R) ** 2
        dtau = lambda rho: 2.0 * _sinc(rho / R) * _dsinc(rho / R) / R
        return _radial_normal_metric(2, tau, dtau)

    def geodesic_ball_volume(self, y0, r):
        if r >= np.pi * self.radius:
            raise InjectivityRangeError("geodesic ball exceeds the injectivity radius")
        return 2.0 * np.pi * self.radius**2 * (1.0 - np.cos(r / self.radius))


@dataclass(frozen=True)
class Hyperbolic(ModelManifold):
    """Hyperbolic plane of curvature -1/R^2, hyperboloid model in R^{2,1}."""

    radius: float = 1.0
    dim: int = 2
    kind: str = "hyperbolic"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.dim != 2:
            raise ValueError("only the hyperbolic plane is cataloged")

    @staticmethod
    def _mdot(u, v):
        return float(u[0] * v[0] + u[1] * v[1] - u[2] * v[2])

    def tag(self):
        return f"hyperbolic(R={self.radius!r})"

    def base_point(self):
        return np.array([0.0, 0.0, self.radius])

    def frame(self, p):
        # tangent space {v : <p, v>_M = 0} is spacelike; Gram-Schmidt in the
        # Minkowski form starting from the canonical axes
        p = np.asarray(p, dtype=float)
        vecs = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            v = e + (self._mdot(e, p) / self.radius**2) * p
            for w in vecs:
                v = v - self._mdot(v, w) * w
            n2 = self._mdot(v, v)
            if n2 > 1e-12:
                vecs.append(v / np.sqrt(n2))
            if len(vecs) == 2:
                break
        return np.vstack(vecs)

    def metric_dot(self, p, u, v):
        return self._mdot(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def injectivity_radius(self, p):
        return np.inf

    def project(self, ambient):
        a = np.asarray(ambient, dtype=float)
        q = -self._mdot(a, a)
        if q <= 0.0:
            raise NumericError("ambient point cannot be normalized onto the hyperboloid")
        out = self.radius * a / np.sqrt(q)
        return out if out[2] > 0 else -out

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.sqrt(max(self._mdot(v, v), 0.0))
        if nv == 0.0:
            return p.copy()
        t = nv / self.radius
        return np.cosh(t) * p + self.radius * np.sinh(t) * (v / nv)

    def log(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        R = self.radius
        u = q + (self._mdot(p, q) / R**2) * p  # component Minkowski-orthogonal to p
        nu = np.sqrt(max(self._mdot(u, u), 0.0))
        if nu == 0.0:
            return np.zeros(3)
        # |u|_M = R sinh(d/R); arcsinh keeps full accuracy at small distances
        d = R * np.arcsinh(nu / R)
        return d * u / nu

    def curvature(self, p):
        K = -1.0 / self.radius**2
        return _packet_from_riemann(p, self.frame(p), _constant_curvature_riemann(2, K))

    def normal_metric(self, y0):
        R = self.radius
        tau = lambda rho: _sinhc(rho / R) ** 2
        dtau = lambda rho: 2.0 * _sinhc(rho / R) * _dsinhc(rho / R) / R
        return _radial_normal_metric(2, tau, dtau)

    def geodesic_ball_volume(self, y0, r):
        return 2.0 * np.pi * self.radius**2 * (np.cosh(r / self.radius) - 1.0)


# -- product S^2 x R ----------------------------------------------------------

@dataclass(frozen=True)
class ProductS2R(ModelManifold):
    """Product of the unit round 2-sphere with a flat line.

    Points are 4-vectors: the first three entries are the unit-sphere
    embedding, the last is the line coordinate.  Ricci eigenvalues at every
    point are (1, 1, 0) with the flat direction last in the canonical frame.
    """

    dim: int = 3
    kind: str = "product_s2_r"
    _sphere: Sphere = field(default_factory=lambda: Sphere(1.0), repr=False)

    def base_point(self):
        return np.array([0.0, 0.0, 1.0, 0.0])

    @staticmethod
    def _split(p):
        p = np.asarray(p, dtype=float)
        return p[:3], p[3]

    def frame(self, p):
        s, _ = self._split(p)
        fs = self._sphere.frame(s)
        out = np.zeros((3, 4))
        out[0, :3] = fs[0]
        out[1, :3] = fs[1]
        out[2, 3] = 1.0
        return out

    def metric_dot(self, p, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return float(np.dot(u[:3], v[:3]) + u[3] * v[3])

    def injectivity_radius(self, p):
        return np.pi  # limited by the unit-sphere factor

    def project(self, ambient):
        a = np.asarray(ambient, dtype=float)
        s = self._sphere.project(a[:3])
        return np.concatenate([s, [a[3]]])

    def exp(self, p, v):
        s, z = self._split(p)
        v = np.asarray(v, dtype=float)
        vs, vz = v[:3], v[3]
        if np.linalg.norm(vs) >= np.pi:
            raise InjectivityRangeError("sphere-factor displacement exceeds pi")
        es = self._sphere.exp(s, vs)
        return np.concatenate([es, [z + vz]])

    def log(self, p, q):
        s, z = self._split(p)
        t, w = self._split(q)
        ls = self._sphere.log(s, t)
        return np.concatenate([ls, [w - z]])

    def curvature(self, p):
        riemann = np.zeros((3, 3, 3, 3))
        riemann[:2, :2, :2, :2] = _constant_curvature_riemann(2, 1.0)
        return _packet_from_riemann(p, self.frame(p), riemann)

    def normal_metric(self, y0):
        g2, ginv2, sd2, gsd2 = self._sphere.normal_metric(self._split(y0)[0])

        def g(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (3, 3))
            out[..., :2, :2] = g2(x[..., :2])
            out[..., 2, 2] = 1.0
            return out

        def g_inv(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (3, 3))
            out[..., :2, :2] = ginv2(x[..., :2])
            out[..., 2, 2] = 1.0
            return out

        def sqrt_det(x):
            x = np.asarray(x, dtype=float)
            return sd2(x[..., :2])

        def grad_sqrt_det(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape)
            out[..., :2] = gsd2(x[..., :2])
            return out

        return g, g_inv, sqrt_det, grad_sqrt_det

    def geodesic_ball_volume(self, y0, r):
        if r >= np.pi:
            raise InjectivityRangeError("geodesic ball exceeds the injectivity radius")
        # cylindrical slicing over the sphere-factor radius t:
        #   vol = 4 pi int_0^r sin(t) sqrt(r^2 - t^2) dt,  t = r sin(psi)
        psi, w = np.polynomial.legendre.leggauss(64)
        psi = 0.25 * np.pi * (psi + 1.0)
        w = 0.25 * np.pi * w
        integrand = np.sin(r * np.sin(psi)) * np.cos(psi) ** 2
        return float(4.0 * np.pi * r**2 * np.sum(w * integrand))


# -- custom coordinate chart --------------------------------------------------

class CustomChart(ModelManifold):
    """A manifold presented by a single coordinate chart with a user metric.

    ``g_fn(x)`` must return a symmetric positive definite (dim, dim) matrix
    for ``|x| < domain_radius``.  Geodesics are integrated numerically with a
    classic adaptive 4/5-order pair at per-step tolerance 1e-12; curvature
    comes from second-order central differences of Christoffel symbols.
    """

    kind = "custom"

    def __init__(self, dim: int, g_fn: Callable, domain_radius: float,
                 injectivity_radius: Optional[float] = None, name: str = "custom"):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.dim = dim
        self.g_fn = g_fn
        self.domain_radius = float(domain_radius)
        self._inj = injectivity_radius
        self.name = name
        self.fd_step = FD_STEP_FACTOR * self.domain_radius
        self._validate_spd()

    def _validate_spd(self):
        rng = np.random.default_rng(0)
        pts = [np.zeros(self.dim)] + [
            0.5 * self.domain_radius * rng.uniform(-1, 1, self.dim) for _ in range(3)]
        for p in pts:
            G = np.asarray(self.g_fn(p), dtype=float)
            if not np.allclose(G, G.T, atol=1e-10):
                raise ValueError("metric function is not symmetric")
            if np.linalg.eigvalsh(G)[0] <= 0:
                raise ValueError("metric function is not positive definite")

    # -- basics -------------------------------------------------------------
    def tag(self):
        return f"custom:{self.name}"

    def base_point(self):
        return np.zeros(self.dim)

    def metric_dot(self, p, u, v):
        G = np.asarray(self.g_fn(np.asarray(p, dtype=float)), dtype=float)
        return float(np.asarray(u) @ G @ np.asarray(v))

    def injectivity_radius(self, p):
        return self._inj if self._inj is not None else self.domain_radius

    def project(self, ambient):
        return np.asarray(ambient, dtype=float)

    def frame(self, p):
        # inverse symmetric square root of g(p) orthonormalizes the
        # coordinate basis deterministically
        G = np.asarray(self.g_fn(np.asarray(p, dtype=float)), dtype=float)
        vals, vecs = np.linalg.eigh(G)
        B = vecs @ np.diag(vals**-0.5) @ vecs.T
        return B.T  # rows E_i = sum_j B[j, i] d_j; B symmetric so rows of B

    # -- Christoffel symbols and geodesics -----------------------------------
    def _dg(self, x):
        """Central-difference partial derivatives dg[k][i][j] = d_k g_ij."""
        h = self.fd_step
        out = np.zeros((self.dim, self.dim, self.dim))
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            gp = np.asarray(self.g_fn(x + e), dtype=float)
            gm = np.asarray(self.g_fn(x - e), dtype=float)
            out[k] = (gp - gm) / (2.0 * h)
        return out

    def christoffel(self, x):
        """Gamma[k, i, j] = Gamma^k_ij at x."""
        x = np.asarray(x, dtype=float)
        G = np.asarray(self.g_fn(x), dtype=float)
        Ginv = np.linalg.inv(G)
        dG = self._dg(x)
        # Gamma^k_ij = 0.5 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
        Gamma = np.zeros((self.dim,) * 3)
        for k in range(self.dim):
            for i in range(self.dim):
                for j in range(self.dim):
                    s = 0.0
                    for l in range(self.dim):
                        s += Ginv[k, l] * (dG[i, j, l] + dG[j, i, l] - dG[l, i, j])
                    Gamma[k, i, j] = 0.5 * s
        return Gamma

    def _geodesic_rhs(self, t, y):
        d = self.dim
        x, v = y[:d], y[d:]
        if np.linalg.norm(x) >= self.domain_radius:
            raise ChartDomainError("geodesic left the chart domain")
        Gamma = self.christoffel(x)
        a = -np.einsum("kij,i,j->k", Gamma, v, v)
        return np.concatenate([v, a])

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = self.norm(p, v)
        if nv == 0.0:
            return p.copy()
        if nv >= self.injectivity_radius(p):
            raise InjectivityRangeError(
                f"|v|_g = {nv:.6g} exceeds injectivity bound {self.injectivity_radius(p):.6g}")
        sol = solve_ivp(self._geodesic_rhs, (0.0, 1.0), np.concatenate([p, v]),
                        method="RK45", rtol=1e-12, atol=1e-12, dense_output=False)
        if not sol.success:
            raise NumericError(f"geodesic integration failed: {sol.message}")
        return sol.y[:self.dim, -1]

    def log(self, p, q):
        """Shooting (damped Newton on the endpoint map) with FD Jacobian."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = q - p
        h = 1e-6 * max(1.0, np.linalg.norm(v))
        for _ in range(50):
            err = self.exp(p, v) - q
            if np.linalg.norm(err) <= 1e-10:
                return v
            J = np.zeros((self.dim, self.dim))
            for i in range(self.dim):
                e = np.zeros(self.dim)
                e[i] = h
                J[:, i] = (self.exp(p, v + e) - self.exp(p, v - e)) / (2.0 * h)
            try:
                step = np.linalg.solve(J, err)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"log shooting Jacobian singular: {exc}") from exc
            v = v - step
        raise NumericError(
            f"log shooting did not converge; last residual {np.linalg.norm(err):.3e}")

    # -- curvature ------------------------------------------------------------
    def curvature(self, p):
        p = np.asarray(p, dtype=float)
        d = self.dim
        h = self.fd_step
        dGamma = np.zeros((d, d, d, d))  # dGamma[m, k, i, j] = d_m Gamma^k_ij
        for m in range(d):
            e = np.zeros(d)
            e[m] = h
            dGamma[m] = (self.christoffel(p + e) - self.christoffel(p - e)) / (2.0 * h)
        Gamma = self.christoffel(p)
        # R^l_{k i j} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
        #              + Gamma^l_{i m} Gamma^m_{j k} - Gamma^l_{j m} Gamma^m_{i k}
        Rup = np.zeros((d, d, d, d))
        for l in range(d):
            for k in range(d):
                for i in range(d):
                    for j in range(d):
                        val = dGamma[i, l, j, k] - dGamma[j, l, i, k]
                        for m in range(d):
                            val += Gamma[l, i, m] * Gamma[m, j, k]
                            val -= Gamma[l, j, m] * Gamma[m, i, k]
                        Rup[l, k, i, j] = val
        G = np.asarray(self.g_fn(p), dtype=float)
        # coordinate array <R(d_i, d_j) d_k, d_l> in the stored convention
        Rdown = np.einsum("lkij,lm->ijkm", Rup, G)
        B = self.frame(p)  # rows are frame coefficient vectors
        Rfr = np.einsum("ia,jb,kc,ld,abcd->ijkl", B, B, B, B, Rdown)
        return _packet_from_riemann(p, B, Rfr)

    # -- normal-coordinate metric via Jacobi fields ---------------------------
    def _jacobi_rhs(self, t, y):
        d = self.dim
        x, v = y[:d], y[d:2 * d]
        J = y[2 * d:2 * d + d * d].reshape(d, d)
        Jd = y[2 * d + d * d:].reshape(d, d)
        if np.linalg.norm(x) >= self.domain_radius:
            raise ChartDomainError("geodesic left the chart domain")
        Gamma = self.christoffel(x)
        h = self.fd_step
        dGamma = np.zeros((d, d, d, d))
        for m in range(d):
            e = np.zeros(d)
            e[m] = h
            dGamma[m] = (self.christoffel(x + e) - self.christoffel(x - e)) / (2.0 * h)
        a = -np.einsum("kij,i,j->k", Gamma, v, v)
        # variational equation for J = dx/dv0
        Jdd = (-np.einsum("mkij,i,j,mn->kn", dGamma, v, v, J)
               - 2.0 * np.einsum("kij,i,jn->kn", Gamma, v, Jd))
        return np.concatenate([v, a, Jd.ravel(), Jdd.ravel()])

    def velocity_jacobian(self, p, v):
        """Endpoint and d(exp_p)/d(v) from one variational solve."""
        d = self.dim
        y0 = np.concatenate([np.asarray(p, dtype=float), np.asarray(v, dtype=float),
                             np.zeros(d * d), np.eye(d).ravel()])
        sol = solve_ivp(self._jacobi_rhs, (0.0, 1.0), y0, method="RK45",
                        rtol=1e-11, atol=1e-11)
        if not sol.success:
            raise NumericError(f"variational integration failed: {sol.message}")
        yf = sol.y[:, -1]
        return yf[:d], yf[2 * d:2 * d + d * d].reshape(d, d)

    def normal_metric(self, y0):
        y0 = np.asarray(y0, dtype=float)
        d = self.dim
        F = self.frame(y0).T  # columns are frame vectors in coordinates

        def g_single(x):
            if np.linalg.norm(x) == 0.0:
                return np.eye(d)
            end, Jv = self.velocity_jacobian(y0, F @ x)
            A = Jv @ F
            G = np.asarray(self.g_fn(end), dtype=float)
            M = A.T @ G @ A
            return 0.5 * (M + M.T)

        def g(x):
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                return g_single(x)
            flat = x.reshape(-1, d)
            return np.stack([g_single(p) for p in flat]).reshape(x.shape[:-1] + (d, d))

        def g_inv(x):
            return np.linalg.inv(g(x))

        def sqrt_det(x):
            return np.sqrt(np.linalg.det(g(x)))

        def grad_sqrt_det(x):
            x = np.asarray(x, dtype=float)
            h = 1e-5
            out = np.zeros(x.shape)
            for i in range(d):
                e = np.zeros(d)
                e[i] = h
                out[..., i] = (sqrt_det(x + e) - sqrt_det(x - e)) / (2.0 * h)
            return out

        return g, g_inv, sqrt_det, grad_sqrt_det

    def geodesic_ball_volume(self, y0, r):
        """Geodesic polar quadrature; one radial Jacobi solve per direction."""
        if self.dim != 2:
            raise NotImplementedError("numeric ball volumes are dim-2 only")
        y0 = np.asarray(y0, dtype=float)
        F = self.frame(y0).T
        n_theta = 48
        thetas = (np.arange(n_theta) + 0.5) * (2.0 * np.pi / n_theta)
        nodes, weights = np.polynomial.legendre.leggauss(32)
        tnodes = 0.5 * r * (nodes + 1.0)
        tweights = 0.5 * r * weights
        total = 0.0
        for th in thetas:
            w = F @ np.array([np.cos(th), np.sin(th)])
            y0s = np.concatenate([y0, w, np.zeros(4), np.eye(2).ravel()])
            sol = solve_ivp(self._jacobi_rhs, (0.0, max(r, 1e-12)), y0s,
                            method="RK45", rtol=1e-11, atol=1e-11, dense_output=True)
            if not sol.success:
                raise NumericError(f"radial integration failed: {sol.message}")
            for t, wt in zip(tnodes, tweights):
                yf = sol.sol(t)
                Jv = yf[4:8].reshape(2, 2)
                end = yf[:2]
                G = np.asarray(self.g_fn(end), dtype=float)
                A = Jv @ F
                M = A.T @ G @ A
                # polar area element: |d exp(t w)/d(t, theta)| = t * sqrt(det g_n)
                total += wt * t * np.sqrt(max(np.linalg.det(M), 0.0))
        return total * (2.0 * np.pi / n_theta)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def curvature_at(m: ModelManifold, p: np.ndarray) -> CurvaturePacket:
    """Curvature packet at p; closed-form for catalog manifolds, central
    finite differences of Christoffel symbols for custom charts."""
    if isinstance(m, CustomChart):
        p = np.asarray(p, dtype=float)
        if np.linalg.norm(p) >= m.domain_radius:
            raise ChartDomainError("base point outside the chart domain")
    return m.curvature(np.asarray(p, dtype=float))


def exp_map(m: ModelManifold, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    return m.exp(np.asarray(p, dtype=float), np.asarray(v, dtype=float))


def log_map(m: ModelManifold, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return m.log(np.asarray(p, dtype=float), np.asarray(q, dtype=float))


def frame_at(m: ModelManifold, p: np.ndarray) -> np.ndarray:
    return m.frame(np.asarray(p, dtype=float))


def _frame_rotation(m: ModelManifold, y0, frame) -> np.ndarray:
    """Coefficient matrix M[a, i] = <F_i, E_a>_g of a frame w.r.t. canonical."""
    E = m.frame(y0)
    F = np.asarray(frame, dtype=float)
    M = np.array([[m.metric_dot(y0, E[a], F[i]) for i in range(F.shape[0])]
                  for a in range(E.shape[0])])
    return M


def pullback_ball_chart(m: ModelManifold, y0: np.ndarray, r: float,
                        frame: Optional[np.ndarray] = None,
                        domain_radius: float = DEFAULT_DOMAIN_RADIUS) -> MetricChart:
    """Rescaled pullback metric of the geodesic ball map on the unit ball.

    The chart carries the metric of ``x -> Exp_y0(r x^i E_i)`` divided by
    r^2, valid on ``|x| < domain_radius``; it tends to the identity matrix
    as r -> 0.
    """
    y0 = np.asarray(y0, dtype=float)
    if not (0.0 < r):
        raise InjectivityRangeError("radius must be positive")
    inj = m.injectivity_radius(y0)
    if r * domain_radius >= inj:
        raise InjectivityRangeError(
            f"r * domain_radius = {r * domain_radius:.6g} reaches the injectivity bound {inj:.6g}")
    inner = m.normal_metric(y0)
    if frame is not None:
        M = _frame_rotation(m, y0, frame)
        inner = _rotated(inner, M)
    g0, ginv0, sd0, gsd0 = inner

    def g(x):
        return g0(np.asarray(x, dtype=float) * r)

    def g_inv(x):
        return ginv0(np.asarray(x, dtype=float) * r)

    def sqrt_det(x):
        return sd0(np.asarray(x, dtype=float) * r)

    def grad_sqrt_det(x):
        return r * gsd0(np.asarray(x, dtype=float) * r)

    cid = f"{m.tag()}:ball:r={r!r}{_frame_fingerprint(frame)}"
    return MetricChart(m.dim, domain_radius, cid, g, g_inv, sqrt_det, grad_sqrt_det)


def _frame_fingerprint(frame) -> str:
    if frame is None:
        return ""
    import hashlib
    arr = np.round(np.asarray(frame, dtype=float), 12)
    return ":F" + hashlib.sha256(arr.tobytes()).hexdigest()[:10]


def pullback_ellipsoid_chart(m: ModelManifold, y0: np.ndarray, r: float,
                             b: np.ndarray, frame: Optional[np.ndarray] = None,
                             domain_radius: float = DEFAULT_DOMAIN_RADIUS) -> MetricChart:
    """Anisotropically stretched pullback metric h_r on the unit ball.

    ``h_r(x) = D g_r(D x) D`` with ``D = diag(1 + r^2 b_i)``; the frame must
    diagonalize the Ricci matrix for the eccentricities b to balance the
    curvature anisotropy.  With b = 0 this is the ball chart unchanged.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (m.dim,):
        raise ValueError(f"b must be a {m.dim}-vector")
    ball = pullback_ball_chart(m, y0, r, frame=frame, domain_radius=domain_radius)
    if np.all(b == 0.0):
        return ball
    dvec = 1.0 + r * r * b
    detD = float(np.prod(dvec))
    Dinv = 1.0 / dvec
    inner_radius = ball.domain_radius / float(np.max(dvec))

    def g(x):
        y = np.asarray(x, dtype=float) * dvec
        return dvec[:, None] * ball.g(y) * dvec[None, :]

    def g_inv(x):
        y = np.asarray(x, dtype=float) * dvec
        return Dinv[:, None] * ball.g_inv(y) * Dinv[None, :]

    def sqrt_det(x):
        y = np.asarray(x, dtype=float) * dvec
        return detD * ball.sqrt_det(y)

    def grad_sqrt_det(x):
        y = np.asarray(x, dtype=float) * dvec
        return detD * dvec * ball.grad_sqrt_det(y)

    cid = (f"{m.tag()}:ellipsoid:r={r!r}:b={np.array2string(b, precision=10)}"
           f"{_frame_fingerprint(frame)}")
    return MetricChart(m.dim, inner_radius, cid, g, g_inv, sqrt_det, grad_sqrt_det)


def ricci_frame(cp: CurvaturePacket) -> NormalFrame:
    """Orthonormal frame diagonalizing the Ricci matrix of a packet.

    Eigenvalues are returned in descending order (stable under ties); each
    eigenvector is sign-fixed so its first coefficient above 1e-12 in
    magnitude is positive, keeping repeated runs reproducible.
    """
    vals, vecs = np.linalg.eigh(cp.ricci)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    new_frame = vecs.T @ cp.frame
    return NormalFrame(frame=new_frame, ricci_eigenvalues=vals)
