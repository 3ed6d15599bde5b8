"""Coefficient extraction from computed spectra and empirical profile scans.

The fitting pipeline solves the rescaled eigenproblem on the unit ball at
two consecutive mesh levels, Richardson-extrapolates the pair under the
h^2 error model, and regresses the normalized eigenvalue shift on the
radius grid.  The star-domain search drives a derivative-free simplex over
Fourier boundary coefficients with the volume constraint restored exactly
inside every objective evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import expansions
from .domains import FourierStar, matched_radius, volume_of
from .geometry import (MetricChart, ModelManifold, curvature_at, identity_chart,
                       pullback_ball_chart, pullback_ellipsoid_chart)
from .meshing import SimplicialMesh, star_domain_mesh, unit_ball_mesh
from .steklov import assemble, solve_steklov


def richardson_extrapolate(nu_coarse: float, nu_fine: float) -> float:
    """(4 nu_fine - nu_coarse) / 3, cancelling an O(h^2) error when the fine
    mesh halves h.  Both inputs must come from the same chart and index."""
    return (4.0 * nu_fine - nu_coarse) / 3.0


@dataclass(frozen=True)
class CoefficientFit:
    """Fitted first-order coefficient of nu2 - 1/r with its standard error."""

    c_hat: float
    stderr: float
    r_grid: Tuple[float, ...]
    mesh_levels: Tuple[int, ...]
    note: str = ""


def coefficient_fit(samples: Sequence[Tuple[float, float]],
                    include_slope: bool = True,
                    mesh_levels: Tuple[int, ...] = (),
                    note: str = "") -> CoefficientFit:
    """Least squares of (nu_j - 1/r_j) / r_j against a constant (plus an
    optional r_j term absorbing the next order); the constant is c_hat."""
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    r = np.array([s[0] for s in samples], dtype=float)
    nu = np.array([s[1] for s in samples], dtype=float)
    if np.unique(r).size != r.size:
        raise ValueError("radii must be distinct")
    y = (nu - 1.0 / r) / r
    cols = [np.ones_like(r)]
    if include_slope:
        cols.append(r)
    A = np.stack(cols, axis=1)
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise ValueError("rank-deficient design matrix")
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(r) - A.shape[1], 1)
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return CoefficientFit(float(coef[0]), float(np.sqrt(cov[0, 0])),
                          tuple(float(x) for x in r),
                          tuple(mesh_levels), note)


def volume_coefficient_fit(samples: Sequence[Tuple[float, float]], N: int,
                           include_slope: bool = True,
                           mesh_levels: Tuple[int, ...] = (),
                           note: str = "") -> CoefficientFit:
    """Volume-form analogue: regress (nu_j - t_j^{-1}) / t_j on a constant
    with t_j = (v_j / |B|)^(1/N)."""
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    vb = expansions.unit_ball_volume(N)
    v = np.array([s[0] for s in samples], dtype=float)
    nu = np.array([s[1] for s in samples], dtype=float)
    t = (v / vb) ** (1.0 / N)
    y = (nu - 1.0 / t) / t
    cols = [np.ones_like(t)]
    if include_slope:
        cols.append(t)
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(t) - A.shape[1], 1)
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return CoefficientFit(float(coef[0]), float(np.sqrt(cov[0, 0])),
                          tuple(float(x) for x in v),
                          tuple(mesh_levels), note)


# ---------------------------------------------------------------------------
# solve pipelines
# ---------------------------------------------------------------------------

_MESH_CACHE: dict = {}
_SOLVE_CACHE: dict = {}
_CACHEABLE_PREFIXES = ("euclidean", "sphere(", "hyperbolic(", "product_s2_r")


def _cached_unit_mesh(dim: int, level: int) -> SimplicialMesh:
    key = (dim, level)
    if key not in _MESH_CACHE:
        _MESH_CACHE[key] = unit_ball_mesh(dim, level)
    return _MESH_CACHE[key]


def chart_nu_spectrum(chart: MetricChart, level: int, k: int = 3) -> np.ndarray:
    """Unit-ball eigenvalues under a chart; catalog charts are memoized by
    their id (the catalogs are homogeneous, so the id determines the
    metric), custom charts are always recomputed."""
    cacheable = chart.chart_id.startswith(_CACHEABLE_PREFIXES)
    key = (chart.chart_id, level)
    if cacheable and key in _SOLVE_CACHE and _SOLVE_CACHE[key].size >= k:
        return _SOLVE_CACHE[key][:k]
    mesh = _cached_unit_mesh(chart.dim, level)
    vals = solve_steklov(assemble(mesh, chart), k).eigenvalues
    if cacheable:
        _SOLVE_CACHE[key] = vals
    return vals


def extrapolated_chart_nu2(chart: MetricChart, levels: Tuple[int, int],
                           calibrate: bool = False) -> float:
    """Rescaled-chart nu2 at two levels, Richardson-extrapolated.

    With ``calibrate`` the eigenvalue at each level is divided by the
    same-mesh flat unit-ball value (whose exact limit is 1), cancelling the
    r-independent part of the discretization error before extrapolation;
    this matters on coarse tetrahedral meshes.
    """
    lo, hi = levels
    if hi != lo + 1:
        raise ValueError("levels must be consecutive")
    out = []
    for level in (lo, hi):
        nu = chart_nu_spectrum(chart, level, k=2)[1]
        if calibrate:
            flat = chart_nu_spectrum(identity_chart(chart.dim), level, k=2)[1]
            nu = nu / flat
        out.append(nu)
    return richardson_extrapolate(out[0], out[1])


def nu2_of_ball(m: ModelManifold, y0, r: float, levels: Tuple[int, int],
                calibrate: bool = False) -> float:
    """nu2 of the geodesic ball of radius r (domain scale, not chart scale)."""
    chart = pullback_ball_chart(m, y0, r)
    return extrapolated_chart_nu2(chart, levels, calibrate) / r


def nu2_of_ellipsoid(m: ModelManifold, y0, r: float, levels: Tuple[int, int],
                     calibrate: bool = False) -> float:
    from .domains import ellipsoid_spec
    spec = ellipsoid_spec(m, y0, r)
    chart = pullback_ellipsoid_chart(m, y0, r, spec.b, frame=spec.frame.frame)
    return extrapolated_chart_nu2(chart, levels, calibrate) / r


def nu2_of_matched_ball(m: ModelManifold, y0, v: float, level: int,
                        k: int = 2) -> float:
    """nu2 of the geodesic ball holding metric volume v, via a single-level
    solve (used in scans where ordering, not extrapolation, matters)."""
    rho = matched_radius(m, y0, v)
    chart = pullback_ball_chart(m, y0, rho)
    return chart_nu_spectrum(chart, level, k=k)[1] / rho


def fit_ball_coefficient(m: ModelManifold, y0, r_grid: Sequence[float],
                         levels: Tuple[int, int], calibrate: bool = False,
                         ellipsoid: bool = False) -> CoefficientFit:
    """Full pipeline: solve the (ball or ellipsoid) chart over the radius
    grid at two mesh levels, extrapolate, and fit the linear coefficient."""
    solver = nu2_of_ellipsoid if ellipsoid else nu2_of_ball
    samples = [(r, solver(m, y0, r, levels, calibrate)) for r in r_grid]
    kind = "ellipsoid" if ellipsoid else "ball"
    note = f"{kind}; Richardson over levels {levels}" + \
        ("; flat-calibrated" if calibrate else "")
    return coefficient_fit(samples, mesh_levels=levels, note=note)


def fit_volume_coefficient(m: ModelManifold, y0, r_grid: Sequence[float],
                           levels: Tuple[int, int],
                           calibrate: bool = False) -> CoefficientFit:
    """Volume-form fit pairing each computed ball eigenvalue with the exact
    metric volume of its ball."""
    samples = []
    for r in r_grid:
        nu = nu2_of_ball(m, y0, r, levels, calibrate)
        samples.append((m.geodesic_ball_volume(np.asarray(y0, dtype=float), r), nu))
    note = f"volume-form; Richardson over levels {levels}"
    return volume_coefficient_fit(samples, m.dim, mesh_levels=levels, note=note)


# ---------------------------------------------------------------------------
# profile scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileRow:
    v: float
    nu2_ball: float
    nu2_ellipsoid: float
    predictor_ball: float
    predictor_ellipsoid: float
    wb_prediction: float


@dataclass(frozen=True)
class ProfileScan:
    rows: List[ProfileRow]
    manifold_kind: str
    mesh_level: int


def profile_scan(m: ModelManifold, y0, v_grid: Sequence[float],
                 mesh_level: int) -> ProfileScan:
    """Computed and predicted nu2 of volume-matched balls (and, in
    dimension 3, balanced ellipsoids) over a decreasing volume grid."""
    from .domains import ellipsoid_spec
    y0 = np.asarray(y0, dtype=float)
    cp = curvature_at(m, y0)
    spec0 = ellipsoid_spec(m, y0, 0.0)
    nf, b = spec0.frame, spec0.b
    pred_ball = expansions.ball_nu2_volume_prediction(m.dim, cp.ricci_min, cp.scalar)
    pred_ell = expansions.ellipsoid_nu2_volume_prediction(m.dim, cp.scalar)
    wb = expansions.wb_surface_prediction(cp.scalar) if m.dim == 2 else pred_ell

    rows = []
    for v in sorted(v_grid, reverse=True):
        rho = matched_radius(m, y0, v)
        chart = pullback_ball_chart(m, y0, rho)
        nu_ball = chart_nu_spectrum(chart, mesh_level, k=2)[1] / rho
        if m.dim == 3 and np.any(b != 0.0):
            chart_e = pullback_ellipsoid_chart(m, y0, rho, b, frame=nf.frame)
            nu_ell = chart_nu_spectrum(chart_e, mesh_level, k=2)[1] / rho
        else:
            nu_ell = nu_ball
        rows.append(ProfileRow(float(v), float(nu_ball), float(nu_ell),
                               pred_ball.evaluate(v), pred_ell.evaluate(v),
                               wb.evaluate(v)))
    return ProfileScan(rows, m.kind, mesh_level)


# ---------------------------------------------------------------------------
# random star-domain sweep (flat inverse-sum bound and deficit columns)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarSweepRow:
    index: int
    total_amplitude: float
    nu2: float
    nu3: float
    inv_sum: float          # 1/nu2 + 1/nu3
    gap: float              # inv_sum - 2
    deficit: float          # |U triangle B| / |U| after volume normalization
    moment_excess: float


def random_star_family(seed: int, n_domains: int, max_amplitude: float,
                       fourier_order: int = 4) -> List[FourierStar]:
    """Seeded random Fourier stars, deterministic for a fixed seed.

    Total amplitudes are drawn log-uniformly from two bands, a near-ball
    band below 0.06 max_amplitude and a far band above 0.3 max_amplitude.
    The gap between the bands keeps the inverse-sum deficit either clearly
    below or clearly above the near-equality threshold: the per-shape gap
    constant (deficit / amplitude^2) varies by more than a factor 10 across
    mode mixes, so amplitudes straddling the threshold would make the
    near-equality classification depend on the random shape, not the size.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_domains):
        raw = rng.uniform(-1.0, 1.0, 2 * (fourier_order - 1))
        norm = np.sum(np.abs(raw))
        u = rng.uniform(0.0, 1.0)
        if i % 2 == 0:
            total = 0.06 * max_amplitude * 3.0 ** (-u)     # near-ball band
        else:
            total = max_amplitude * (10.0 / 3.0) ** (-u)   # far band
        coeffs = raw * (total / norm)
        out.append(_coeffs_to_star(coeffs, fourier_order))
    return out


def _star_sweep_one(idx_star, levels):
    from .domains import normalized_deficit_pair
    idx, star = idx_star
    norm = star.normalized()
    chart = identity_chart(2)
    nus = []
    for level in levels:
        mesh = star_domain_mesh(norm.radius, level)
        ev = solve_steklov(assemble(mesh, chart), 3).eigenvalues
        nus.append(ev[1:3])
    nu2, nu3 = (richardson_extrapolate(nus[0][j], nus[1][j]) for j in (0, 1))
    inv_sum = 1.0 / nu2 + 1.0 / nu3
    deficit, excess = normalized_deficit_pair(norm.radius, norm.dradius)
    return StarSweepRow(idx, star.total_amplitude(), float(nu2), float(nu3),
                        float(inv_sum), float(inv_sum - 2.0), deficit, excess)


def brock_star_sweep(seed: int, n_domains: int, max_amplitude: float = 0.2,
                     levels: Tuple[int, int] = (3, 4), fourier_order: int = 4,
                     max_workers: int = 1) -> List[StarSweepRow]:
    """Solve the flat Steklov problem on seeded random star domains of unit
    disk volume and tabulate inverse-sum gaps with isoperimetric columns.

    Rows are returned in generation order regardless of worker count, so
    the output is byte-stable for a fixed seed.
    """
    stars = random_star_family(seed, n_domains, max_amplitude, fourier_order)
    items = list(enumerate(stars))
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda it: _star_sweep_one(it, levels), items))
    else:
        rows = [_star_sweep_one(it, levels) for it in items]
    return rows


# ---------------------------------------------------------------------------
# star-domain shape search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapeSearchResult:
    best_nu2: float
    best_star: FourierStar
    best_coefficients: np.ndarray
    evaluations: int
    converged: bool
    trace: List[float] = field(default_factory=list)


def _coeffs_to_star(coeffs: np.ndarray, fourier_order: int) -> FourierStar:
    modes = {}
    idx = 0
    for k in range(2, fourier_order + 1):
        modes[k] = (coeffs[idx], coeffs[idx + 1])
        idx += 2
    return FourierStar.from_modes(modes)


def _volume_normalized_mesh(star: FourierStar, chart: MetricChart,
                            target_volume: float, level: int):
    """Scale r0 by bisection until the mesh volume under the chart hits the
    target to 1e-10 relative; the mesh maps linearly with r0."""
    base = star_domain_mesh(star.radius, level,
                            max_radius=0.98 * chart.domain_radius)
    v1 = volume_of(chart, base)

    def mesh_at(s):
        return SimplicialMesh(base.dim, base.vertices * s, base.cells,
                              base.boundary_facets, base.level,
                              base.boundary_projection)

    f = lambda s: volume_of(chart, mesh_at(s)) - target_volume
    s_cap = 0.98 * chart.domain_radius / (
        np.max(np.linalg.norm(base.vertices, axis=1)) + 1e-12)
    # flat scaling s^dim is exact for the identity chart and a tight first
    # bracket otherwise
    s0 = (target_volume / v1) ** (1.0 / base.dim)
    lo, hi = 0.9 * s0, min(1.1 * s0, s_cap)
    flo, fhi = f(lo), f(hi)
    tries = 0
    while flo > 0 and tries < 30:
        lo *= 0.8
        flo = f(lo)
        tries += 1
    tries = 0
    while fhi < 0 and hi < s_cap and tries < 30:
        hi = min(1.25 * hi, s_cap)
        fhi = f(hi)
        tries += 1
    if flo > 0 or fhi < 0:
        raise ValueError("volume target not bracketed by admissible scalings")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    s = 0.5 * (lo + hi)
    scaled = FourierStar(star.r0 * s, star.cos_coeffs.copy(), star.sin_coeffs.copy())
    return mesh_at(s), scaled


def shape_search(chart: MetricChart, target_volume: float, fourier_order: int,
                 budget: int, seed: int = 0, mesh_level: int = 3,
                 initial_coeffs: Optional[np.ndarray] = None) -> ShapeSearchResult:
    """Derivative-free simplex search for the nu2-maximizing star domain of
    fixed volume under a planar chart.

    The eigenvalue can be degenerate at crossings, so the objective is
    driven by Nelder-Mead rather than gradients; volume is renormalized
    exactly inside each evaluation.  Deterministic for a fixed seed.
    """
    if chart.dim != 2:
        raise ValueError("shape search is planar only")
    if fourier_order > 8:
        raise ValueError("fourier order capped at 8")
    nparam = 2 * (fourier_order - 1)
    rng = np.random.default_rng(seed)
    x0 = np.asarray(initial_coeffs, dtype=float) if initial_coeffs is not None \
        else rng.uniform(-0.02, 0.02, nparam)

    state = {"count": 0, "best": -np.inf, "best_x": x0.copy(), "trace": []}

    def objective(x):
        state["count"] += 1
        if np.sum(np.abs(x)) > 0.6:
            return 1e3
        star = _coeffs_to_star(x, fourier_order)
        try:
            mesh, _ = _volume_normalized_mesh(star, chart, target_volume, mesh_level)
            nu2 = solve_steklov(assemble(mesh, chart), 2).eigenvalues[1]
        except (ValueError, FloatingPointError):
            return 1e3
        if nu2 > state["best"]:
            state["best"] = nu2
            state["best_x"] = np.asarray(x, dtype=float).copy()
        state["trace"].append(float(state["best"]))
        return -nu2

    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"maxfev": budget, "xatol": 1e-5, "fatol": 1e-9,
                            "adaptive": True})
    best_x = state["best_x"]
    star = _coeffs_to_star(best_x, fourier_order)
    mesh, scaled = _volume_normalized_mesh(star, chart, target_volume, mesh_level)
    # report the best eigenvalue at one level higher fidelity with
    # extrapolation, so the headline number is not limited by the search mesh
    nu_lo = solve_steklov(assemble(mesh, chart), 2).eigenvalues[1]
    mesh_hi, _ = _volume_normalized_mesh(star, chart, target_volume, mesh_level + 1)
    nu_hi = solve_steklov(assemble(mesh_hi, chart), 2).eigenvalues[1]
    best_nu2 = richardson_extrapolate(nu_lo, nu_hi)
    return ShapeSearchResult(float(best_nu2), scaled, best_x,
                             state["count"], bool(res.success), state["trace"])
