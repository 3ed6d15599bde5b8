"""Desk-scale laboratory for Steklov eigenvalues of small domains on model
Riemannian manifolds: geodesic balls, curvature-balanced ellipsoids, star
perturbations, and the asymptotic profile machinery that ties them together.
"""

from .config import ManifoldSpec, RunConfig, TOOL_VERSION
from .domains import (DomainGeometry, FourierStar, GeodesicEllipsoidSpec,
                      boundary_centroid, ellipsoid_coefficients,
                      ellipsoid_spec, isoperimetric_deficit_check,
                      matched_radius, symmetric_difference, volume_of,
                      weighted_boundary_moment)
from .expansions import (ExpansionPrediction, ball_nu2_expansion,
                         ball_nu2_of_volume, ball_volume_expansion,
                         brock_sum_bound, compare_profiles,
                         ellipsoid_nu2_expansion, ellipsoid_nu2_of_volume,
                         wb_surface_profile)
from .geometry import (ChartDomainError, CurvaturePacket, CustomChart,
                       Euclidean, Hyperbolic, InjectivityRangeError,
                       MetricChart, ModelManifold, NormalFrame, NumericError,
                       ProductS2R, Sphere, curvature_at, exp_map, frame_at,
                       identity_chart, log_map, pullback_ball_chart,
                       pullback_ellipsoid_chart, ricci_frame)
from .meshing import (SimplicialMesh, export_mesh, read_mesh, refine,
                      star_domain_mesh, unit_ball_mesh)
from .profile import (CoefficientFit, ProfileScan, brock_star_sweep,
                      coefficient_fit, fit_ball_coefficient,
                      fit_volume_coefficient, profile_scan,
                      richardson_extrapolate, shape_search)
from .steklov import (AssembledSystem, SteklovSpectrum, assemble,
                      rayleigh_quotient, solve_steklov)

__version__ = TOOL_VERSION
