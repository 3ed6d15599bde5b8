"""Closed-form asymptotic predictors for the first nontrivial Steklov
eigenvalue of small geodesic balls and curvature-balanced ellipsoids.

Each predictor exposes its leading term and first-order coefficient
separately so that fits can target the coefficient alone; ``evaluate``
returns their sum.  Radius-form predictors use the monomial r, volume-form
predictors the monomial (v / |B|)^(1/N).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .geometry import ModelManifold, curvature_at, unit_ball_volume


@dataclass(frozen=True)
class ExpansionPrediction:
    """leading(t) + coefficient * monomial(t) for a cataloged formula."""

    formula_id: str
    leading: Callable[[float], float]
    coefficient: float
    monomial: Callable[[float], float]

    def evaluate(self, t: float) -> float:
        return self.leading(t) + self.coefficient * self.monomial(t)


# ---------------------------------------------------------------------------
# radius-form predictors
# ---------------------------------------------------------------------------

def ball_nu2_prediction(N: int, R_min: float) -> ExpansionPrediction:
    """nu2 of the geodesic ball of radius r: 1/r + (2 R_min / (3 (N+2))) r."""
    return ExpansionPrediction(
        formula_id="ball_radius",
        leading=lambda r: 1.0 / r,
        coefficient=2.0 * R_min / (3.0 * (N + 2)),
        monomial=lambda r: r,
    )


def ball_nu2_expansion(r: float, N: int, R_min: float) -> float:
    if r <= 0:
        raise ValueError("radius must be positive")
    return ball_nu2_prediction(N, R_min).evaluate(r)


def ellipsoid_nu2_prediction(N: int, S: float) -> ExpansionPrediction:
    """nu2 of the balanced ellipsoid: 1/r + (2 S / (3 N (N+2))) r."""
    return ExpansionPrediction(
        formula_id="ellipsoid_radius",
        leading=lambda r: 1.0 / r,
        coefficient=2.0 * S / (3.0 * N * (N + 2)),
        monomial=lambda r: r,
    )


def ellipsoid_nu2_expansion(r: float, N: int, S: float) -> float:
    if r <= 0:
        raise ValueError("radius must be positive")
    return ellipsoid_nu2_prediction(N, S).evaluate(r)


def ball_volume_prediction(N: int, S: float) -> ExpansionPrediction:
    """Metric volume of the geodesic ball: r^N |B| (1 - S r^2 / (6 (N+2)))."""
    vb = unit_ball_volume(N)
    return ExpansionPrediction(
        formula_id="ball_metric_volume",
        leading=lambda r: vb * r**N,
        coefficient=-S * vb / (6.0 * (N + 2)),
        monomial=lambda r: r ** (N + 2),
    )


def ball_volume_expansion(r: float, N: int, S: float) -> float:
    if r <= 0:
        raise ValueError("radius must be positive")
    return ball_volume_prediction(N, S).evaluate(r)


# ---------------------------------------------------------------------------
# volume-form predictors
# ---------------------------------------------------------------------------

def ball_nu2_volume_prediction(N: int, R_min: float, S: float) -> ExpansionPrediction:
    """Ball nu2 against its own metric volume; coefficient
    (4 N R_min - S) / (6 N (N+2))."""
    vb = unit_ball_volume(N)
    return ExpansionPrediction(
        formula_id="ball_volume",
        leading=lambda v: (v / vb) ** (-1.0 / N),
        coefficient=(4.0 * N * R_min - S) / (6.0 * N * (N + 2)),
        monomial=lambda v: (v / vb) ** (1.0 / N),
    )


def ball_nu2_of_volume(v: float, N: int, R_min: float, S: float) -> float:
    if v <= 0:
        raise ValueError("volume must be positive")
    return ball_nu2_volume_prediction(N, R_min, S).evaluate(v)


def ellipsoid_nu2_volume_prediction(N: int, S: float) -> ExpansionPrediction:
    """Ellipsoid nu2 against volume; coefficient S / (2 N (N+2)).  This is
    also the small-volume lower-bound predictor for the profile."""
    vb = unit_ball_volume(N)
    return ExpansionPrediction(
        formula_id="ellipsoid_volume",
        leading=lambda v: (v / vb) ** (-1.0 / N),
        coefficient=S / (2.0 * N * (N + 2)),
        monomial=lambda v: (v / vb) ** (1.0 / N),
    )


def ellipsoid_nu2_of_volume(v: float, N: int, S: float) -> float:
    if v <= 0:
        raise ValueError("volume must be positive")
    return ellipsoid_nu2_volume_prediction(N, S).evaluate(v)


def wb_surface_prediction(S_max: float) -> ExpansionPrediction:
    """Closed-surface profile: (v/pi)^(-1/2) + (S_max/16) (v/pi)^(1/2)."""
    return ExpansionPrediction(
        formula_id="surface_profile",
        leading=lambda v: (v / np.pi) ** -0.5,
        coefficient=S_max / 16.0,
        monomial=lambda v: (v / np.pi) ** 0.5,
    )


def wb_surface_profile(v: float, S_max: float) -> float:
    if v <= 0:
        raise ValueError("volume must be positive")
    return wb_surface_prediction(S_max).evaluate(v)


# ---------------------------------------------------------------------------
# inverse-sum bound and two-manifold comparison
# ---------------------------------------------------------------------------

def brock_sum_bound(eigenvalues: Sequence[float], tolerance: float = 0.0):
    """Sum of 1/nu over the first N nontrivial eigenvalues and whether it
    meets the flat-space lower bound N (within the tolerance)."""
    vals = np.asarray(eigenvalues, dtype=float)
    if np.any(vals <= 0):
        raise ValueError("nontrivial eigenvalues must be positive")
    N = vals.size
    total = float(np.sum(1.0 / vals))
    return total, total >= N - tolerance


@dataclass(frozen=True)
class ComparisonRow:
    v: float
    predictor_a: float
    predictor_b: float
    nu2_a: Optional[float]
    nu2_b: Optional[float]
    predictor_strict: bool       # predictor_a < predictor_b
    computed_matches: Optional[bool]


@dataclass(frozen=True)
class ComparisonReport:
    scalar_a: float
    scalar_b: float
    rows: List[ComparisonRow]
    predictor_ordering_all: bool
    matched_v_max: Optional[float]   # largest v up to which computed ordering agrees


def compare_profiles(manifold_a: ModelManifold, y_a, manifold_b: ModelManifold, y_b,
                     v_grid: Sequence[float], mesh_level: Optional[int] = None,
                     solver_k: int = 3) -> ComparisonReport:
    """Tabulate the volume-form predictors (and, when a mesh level is given,
    computed eigenvalues) of two manifolds over a grid of volumes.

    A strictly smaller scalar curvature at the base point orders the
    predictors for every small volume; the report flags the v-range where
    the computed ordering agrees.
    """
    if manifold_a.dim != manifold_b.dim:
        raise ValueError("manifolds must share a dimension")
    N = manifold_a.dim
    sa = curvature_at(manifold_a, np.asarray(y_a, dtype=float)).scalar
    sb = curvature_at(manifold_b, np.asarray(y_b, dtype=float)).scalar
    pa = ellipsoid_nu2_volume_prediction(N, sa)
    pb = ellipsoid_nu2_volume_prediction(N, sb)

    solve = None
    if mesh_level is not None:
        from .profile import nu2_of_matched_ball
        solve = nu2_of_matched_ball

    rows = []
    for v in sorted(v_grid, reverse=True):
        fa, fb = pa.evaluate(v), pb.evaluate(v)
        na = nb = None
        match = None
        if solve is not None:
            na = solve(manifold_a, y_a, v, mesh_level)
            nb = solve(manifold_b, y_b, v, mesh_level)
            if sa == sb:
                match = True
            else:
                match = (na < nb) == (fa < fb) or (na == nb and fa == fb)
        rows.append(ComparisonRow(float(v), fa, fb, na, nb, fa < fb, match))

    strict_all = all(r.predictor_strict for r in rows) if sa < sb else \
        all(not r.predictor_strict for r in rows)
    matched_v_max = None
    if solve is not None:
        agreeing = [r.v for r in rows if r.computed_matches]
        matched_v_max = max(agreeing) if agreeing else None
    return ComparisonReport(sa, sb, rows, strict_all, matched_v_max)
