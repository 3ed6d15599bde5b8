"""Riemannian P1 finite elements for the Steklov eigenvalue problem.

The stiffness form freezes the metric at each cell centroid (second-order
accurate); the boundary mass form uses 2-point Gauss quadrature on segments
and the 3-point edge-midpoint rule on triangles, with the metric evaluated
at every quadrature point.  Eigenpairs come from a Schur complement of the
interior degrees of freedom onto the boundary (a discrete
Dirichlet-to-Neumann reduction) followed by a dense symmetric generalized
eigensolve; a sparse shift-invert route is kept as an independent
cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import MetricChart, NumericError
from .meshing import SimplicialMesh, cell_volumes

# dense Schur path is the in-repo oracle; refuse silently huge reductions
MAX_BOUNDARY_DOFS = 4000


@dataclass(frozen=True)
class AssembledSystem:
    """Stiffness K, boundary mass M, and the boundary dof index set."""

    stiffness: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    boundary_dof_index: np.ndarray
    mesh: SimplicialMesh
    chart: MetricChart

    @property
    def num_dofs(self) -> int:
        return self.stiffness.shape[0]

    def total_boundary_measure(self) -> float:
        ones = np.ones(self.num_dofs)
        return float(ones @ (self.boundary_mass @ ones))


@dataclass(frozen=True)
class SteklovSpectrum:
    """Ascending eigenvalues with boundary-orthonormal eigenvectors."""

    eigenvalues: np.ndarray      # (k,)
    eigenvectors: np.ndarray     # (ndof, k), u^T M u = identity
    mesh_level: int
    chart_id: str
    residuals: np.ndarray        # relative Rayleigh-quotient mismatch per pair

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "mesh_level": int(self.mesh_level),
            "chart_id": self.chart_id,
            "residuals": [float(r) for r in self.residuals],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# quadrature helpers shared with the domain-functional module
# ---------------------------------------------------------------------------

_GAUSS2 = (np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]),
           np.array([0.5, 0.5]))
# reference-triangle edge midpoints, weights sum to the reference area 1/2
_TRI_MID = (np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
            np.array([1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]))


def boundary_quadrature(mesh: SimplicialMesh, chart: MetricChart):
    """Quadrature points, metric-weighted measures, and P1 basis values on
    every boundary facet.

    Returns ``(points, weights, basis)`` with shapes (nb, nq, dim),
    (nb, nq) and (nq, dim) where ``weights`` already contains the
    quadrature weight times the boundary measure factor of dsigma_g.
    """
    V, F = mesh.vertices, mesh.boundary_facets
    if mesh.dim == 2:
        t_nodes, t_w = _GAUSS2
        P0, P1 = V[F[:, 0]], V[F[:, 1]]
        tau = P1 - P0
        pts = P0[:, None, :] + t_nodes[None, :, None] * tau[:, None, :]
        G = chart.g(pts)
        length = np.sqrt(np.einsum("nd,nqde,ne->nq", tau, G, tau))
        weights = t_w[None, :] * length
        basis = np.stack([1.0 - t_nodes, t_nodes], axis=1)  # (nq, 2)
        return pts, weights, basis
    nodes, w = _TRI_MID
    P0, P1, P2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    J = np.stack([P1 - P0, P2 - P0], axis=1)  # (nb, 2, 3)
    pts = (P0[:, None, :]
           + nodes[None, :, 0, None] * (P1 - P0)[:, None, :]
           + nodes[None, :, 1, None] * (P2 - P0)[:, None, :])
    G = chart.g(pts)
    A = np.einsum("nad,nqde,nbe->nqab", J, G, J)
    area_factor = np.sqrt(np.linalg.det(A))
    weights = w[None, :] * area_factor
    basis = np.stack([1.0 - nodes[:, 0] - nodes[:, 1], nodes[:, 0], nodes[:, 1]], axis=1)
    return pts, weights, basis


def assemble(mesh: SimplicialMesh, chart: MetricChart) -> AssembledSystem:
    """Assemble the metric-weighted stiffness and boundary mass forms."""
    if mesh.dim != chart.dim:
        raise ValueError("mesh and chart dimensions differ")
    chart.require_inside(mesh.vertices)

    V, C = mesh.vertices, mesh.cells
    nv = V.shape[0]
    d = mesh.dim

    E = V[C[:, 1:]] - V[C[:, :1]]            # (nc, d, d) rows are edges
    vol = cell_volumes(mesh)
    if np.any(vol <= 0):
        raise ValueError("mesh contains non-positively oriented cells")
    Einv = np.linalg.inv(E)
    # gradients of the barycentric basis: grad lambda_j = column j-1 of E^{-1}
    grads = np.empty((C.shape[0], d + 1, d))
    grads[:, 1:, :] = np.swapaxes(Einv, 1, 2)
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)

    centroids = V[C].mean(axis=1)
    Ginv = chart.g_inv(centroids)
    W = chart.sqrt_det(centroids)

    K_loc = np.einsum("c,c,cad,cde,cbe->cab", vol, W, grads, Ginv, grads)
    rows = np.repeat(C[:, :, None], d + 1, axis=2)
    cols = np.repeat(C[:, None, :], d + 1, axis=1)
    K = sp.coo_matrix((K_loc.ravel(), (rows.ravel(), cols.ravel())),
                      shape=(nv, nv)).tocsr()

    pts, weights, basis = boundary_quadrature(mesh, chart)
    F = mesh.boundary_facets
    M_loc = np.einsum("nq,qa,qb->nab", weights, basis, basis)
    rowsb = np.repeat(F[:, :, None], d, axis=2)
    colsb = np.repeat(F[:, None, :], d, axis=1)
    M = sp.coo_matrix((M_loc.ravel(), (rowsb.ravel(), colsb.ravel())),
                      shape=(nv, nv)).tocsr()

    bindex = np.unique(F)
    return AssembledSystem(K, M, bindex, mesh, chart)


def rayleigh_quotient(system: AssembledSystem, u: np.ndarray) -> float:
    """(u^T K u) / (u^T M u); an upper bound for the first nontrivial
    eigenvalue whenever u is boundary-orthogonal to constants."""
    u = np.asarray(u, dtype=float)
    den = float(u @ (system.boundary_mass @ u))
    if den <= 1e-14 * float(u @ u):
        raise ValueError("vector is numerically in the null space of the boundary mass")
    num = float(u @ (system.stiffness @ u))
    return num / den


def _schur_reduction(system: AssembledSystem):
    K = system.stiffness
    b = system.boundary_dof_index
    n = system.num_dofs
    mask = np.zeros(n, dtype=bool)
    mask[b] = True
    i = np.nonzero(~mask)[0]
    K_bb = K[np.ix_(b, b)].toarray()
    M_bb = system.boundary_mass[np.ix_(b, b)].toarray()
    if i.size == 0:
        return 0.5 * (K_bb + K_bb.T), M_bb, b, i, None
    K_ib = K[np.ix_(i, b)]
    K_ii = K[np.ix_(i, i)].tocsc()
    try:
        lu = spla.splu(K_ii)
    except RuntimeError as exc:
        raise NumericError(f"interior factorization failed: {exc}") from exc
    X = lu.solve(K_ib.toarray())          # K_ii^{-1} K_ib
    S = K_bb - K_ib.T.toarray() @ X
    return 0.5 * (S + S.T), M_bb, b, i, X


def solve_steklov(system: AssembledSystem, k: int,
                  method: str = "schur") -> SteklovSpectrum:
    """Smallest k generalized eigenpairs of K u = nu M u on the boundary
    subspace.

    ``method="schur"`` (default) eliminates interior dofs and runs a dense
    symmetric eigensolve; ``method="shift_invert"`` is the independent
    sparse route with shift 0.5 used for cross-checking.
    """
    nb = system.boundary_dof_index.size
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > nb:
        raise ValueError(f"k = {k} exceeds the boundary dof count {nb}")
    if nb > MAX_BOUNDARY_DOFS:
        raise NumericError(f"boundary dof count {nb} beyond the dense-oracle range")

    if method == "schur":
        S, M_bb, b, i, X = _schur_reduction(system)
        try:
            vals, vecs_b = scipy.linalg.eigh(S, M_bb, subset_by_index=(0, k - 1))
        except scipy.linalg.LinAlgError as exc:
            cond = np.linalg.cond(M_bb)
            raise NumericError(
                f"dense eigensolve failed (cond(M_bb) = {cond:.3e}): {exc}") from exc
        U = np.zeros((system.num_dofs, k))
        U[b] = vecs_b
        if i.size:
            U[i] = -X @ vecs_b
    elif method == "shift_invert":
        K = system.stiffness.tocsc()
        M = system.boundary_mass.tocsc()
        v0 = np.ones(system.num_dofs)
        vals, U = spla.eigsh(K, k=k, M=M, sigma=0.5, which="LM", v0=v0, mode="normal")
        order = np.argsort(vals)
        vals, U = vals[order], U[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    # boundary-L2 orthonormalization (eigh already returns M-orthonormal
    # vectors; renormalize defensively for the sparse route)
    MU = system.boundary_mass @ U
    norms = np.sqrt(np.einsum("nk,nk->k", U, MU))
    U = U / norms
    residuals = np.empty(k)
    KU = system.stiffness @ U
    MU = system.boundary_mass @ U
    for j in range(k):
        rq = float(U[:, j] @ KU[:, j]) / float(U[:, j] @ MU[:, j])
        residuals[j] = abs(rq - vals[j]) / max(abs(vals[j]), 1.0)
    return SteklovSpectrum(np.asarray(vals, dtype=float), U, system.mesh.level,
                           system.chart.chart_id, residuals)


def boundary_coordinate_vector(system: AssembledSystem, axis: int) -> np.ndarray:
    """Dof vector of the coordinate function x^axis (a handy Rayleigh trial)."""
    return system.mesh.vertices[:, axis].copy()


def boundary_correlation(system: AssembledSystem, u: np.ndarray,
                         span: np.ndarray) -> float:
    """Boundary-L2 correlation of u with a span of trial vectors (columns)."""
    M = system.boundary_mass
    Q = np.asarray(span, dtype=float)
    G = Q.T @ (M @ Q)
    c = Q.T @ (M @ u)
    coef = np.linalg.solve(G, c)
    proj = float(c @ coef)
    uu = float(u @ (M @ u))
    return np.sqrt(max(proj, 0.0) / uu)
