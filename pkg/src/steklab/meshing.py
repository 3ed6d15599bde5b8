"""Structured simplicial meshes of the unit disk and unit ball.

Construction is deterministic: a hexagonal fan for the disk (six equilateral
triangles around the origin), an octahedral fan for the ball (eight
trirectangular tetrahedra).  Uniform red refinement with boundary snapping
produces the finer levels, so the characteristic edge length is
``h0 * 2**(-level)`` with h0 = 1 in dimension 2 and sqrt(2) in dimension 3.

Star-shaped planar domains are images of the unit disk mesh under
``x -> radius_fn(theta) * x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class SimplicialMesh:
    """Vertices, positively oriented cells, outward boundary facets.

    ``boundary_projection`` maps a near-boundary point onto the curved
    boundary the mesh discretizes (the unit sphere by default); refinement
    uses it to snap new boundary vertices.
    """

    dim: int
    vertices: np.ndarray          # (nv, dim) float
    cells: np.ndarray             # (nc, dim+1) int
    boundary_facets: np.ndarray   # (nb, dim) int, outward oriented
    level: int
    boundary_projection: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    def boundary_vertex_indices(self) -> np.ndarray:
        return np.unique(self.boundary_facets)

    def edge_length_stats(self):
        edges = _cell_edges(self.dim, self.cells)
        vec = self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]]
        lengths = np.linalg.norm(vec, axis=1)
        return float(lengths.min()), float(lengths.max())


def _unit_sphere_snap(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / n


def _cell_edges(dim: int, cells: np.ndarray) -> np.ndarray:
    """Unique undirected edges of the cell complex, as sorted index pairs."""
    pairs = []
    nv = dim + 1
    for a in range(nv):
        for b in range(a + 1, nv):
            pairs.append(cells[:, (a, b)])
    edges = np.sort(np.vstack(pairs), axis=1)
    return np.unique(edges, axis=0)


def _orient_cells(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Swap the last two vertices of any negatively oriented cell."""
    e = vertices[cells[:, 1:]] - vertices[cells[:, :1]]
    det = np.linalg.det(e)
    cells = cells.copy()
    flip = det < 0
    cells[flip, -2], cells[flip, -1] = cells[flip, -1].copy(), cells[flip, -2].copy()
    return cells


def _orient_boundary(vertices: np.ndarray, cells: np.ndarray,
                     facets: np.ndarray, owner: np.ndarray) -> np.ndarray:
    """Orient each boundary facet so its normal points away from its cell."""
    dim = vertices.shape[1]
    facets = facets.copy()
    centroids = vertices[cells[owner]].mean(axis=1)
    mid = vertices[facets].mean(axis=1)
    if dim == 2:
        t = vertices[facets[:, 1]] - vertices[facets[:, 0]]
        normal = np.stack([t[:, 1], -t[:, 0]], axis=1)
    else:
        u = vertices[facets[:, 1]] - vertices[facets[:, 0]]
        v = vertices[facets[:, 2]] - vertices[facets[:, 0]]
        normal = np.cross(u, v)
    inward = np.einsum("ij,ij->i", normal, mid - centroids) < 0
    facets[inward, -2], facets[inward, -1] = (facets[inward, -1].copy(),
                                              facets[inward, -2].copy())
    return facets


def _boundary_facets_from_cells(dim: int, cells: np.ndarray):
    """Facets occurring in exactly one cell, with their owning cell index."""
    nv = dim + 1
    combos = [tuple(j for j in range(nv) if j != drop) for drop in range(nv)]
    faces = np.vstack([cells[:, c] for c in combos])
    owners = np.tile(np.arange(cells.shape[0]), nv)
    key = np.sort(faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    on_boundary = counts[inverse] == 1
    return faces[on_boundary], owners[on_boundary]


def _base_disk() -> SimplicialMesh:
    angles = np.arange(6) * (np.pi / 3.0)
    verts = np.vstack([np.zeros((1, 2)),
                       np.stack([np.cos(angles), np.sin(angles)], axis=1)])
    cells = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)], dtype=np.int64)
    cells = _orient_cells(verts, cells)
    facets, owner = _boundary_facets_from_cells(2, cells)
    facets = _orient_boundary(verts, cells, facets, owner)
    return SimplicialMesh(2, verts, cells, facets, 0, _unit_sphere_snap)


def _base_ball() -> SimplicialMesh:
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
    ])
    # the eight octants, each a tetrahedron on the origin
    octants = [(1, 3, 5), (3, 2, 5), (2, 4, 5), (4, 1, 5),
               (3, 1, 6), (2, 3, 6), (4, 2, 6), (1, 4, 6)]
    cells = np.array([[0, a, b, c] for a, b, c in octants], dtype=np.int64)
    cells = _orient_cells(verts, cells)
    facets, owner = _boundary_facets_from_cells(3, cells)
    facets = _orient_boundary(verts, cells, facets, owner)
    return SimplicialMesh(3, verts, cells, facets, 0, _unit_sphere_snap)


def unit_ball_mesh(dim: int, level: int) -> SimplicialMesh:
    """Quasi-uniform mesh of the unit disk (dim 2) or unit ball (dim 3).

    Level 0 has 7 vertices and 6 cells in dimension 2, 7 vertices and
    8 cells in dimension 3; each level halves the edge length.
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    if level < 0:
        raise ValueError("level must be nonnegative")
    mesh = _base_disk() if dim == 2 else _base_ball()
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def refine(mesh: SimplicialMesh) -> SimplicialMesh:
    """Uniform red refinement; new boundary vertices snap onto the curved
    boundary via the mesh's boundary projection."""
    V, C = mesh.vertices, mesh.cells
    nv = V.shape[0]
    edges = _cell_edges(mesh.dim, C)
    midpoints = 0.5 * (V[edges[:, 0]] + V[edges[:, 1]])

    keys = edges[:, 0].astype(np.int64) * nv + edges[:, 1].astype(np.int64)
    sort_order = np.argsort(keys, kind="stable")
    keys_sorted = keys[sort_order]
    inv_order = np.empty_like(sort_order)
    inv_order[np.arange(sort_order.size)] = sort_order

    def mid_id(a, b):
        key = np.minimum(a, b).astype(np.int64) * nv + np.maximum(a, b).astype(np.int64)
        pos = np.searchsorted(keys_sorted, key)
        return nv + sort_order[pos]

    # snap midpoints of boundary facet edges onto the true boundary
    snapped = midpoints.copy()
    if mesh.boundary_projection is not None:
        bf = mesh.boundary_facets
        if mesh.dim == 2:
            bedges = [(bf[:, 0], bf[:, 1])]
        else:
            bedges = [(bf[:, 0], bf[:, 1]), (bf[:, 1], bf[:, 2]), (bf[:, 0], bf[:, 2])]
        for a, b in bedges:
            ids = mid_id(a, b) - nv
            snapped[ids] = mesh.boundary_projection(midpoints[ids])

    newV = np.vstack([V, snapped])

    if mesh.dim == 2:
        a, b, c = C[:, 0], C[:, 1], C[:, 2]
        ab, bc, ca = mid_id(a, b), mid_id(b, c), mid_id(c, a)
        newC = np.vstack([
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
    else:
        t0, t1, t2, t3 = C[:, 0], C[:, 1], C[:, 2], C[:, 3]
        m01, m12, m02 = mid_id(t0, t1), mid_id(t1, t2), mid_id(t0, t2)
        m03, m13, m23 = mid_id(t0, t3), mid_id(t1, t3), mid_id(t2, t3)
        corner = [
            np.stack([t0, m01, m02, m03], axis=1),
            np.stack([t1, m01, m12, m13], axis=1),
            np.stack([t2, m12, m02, m23], axis=1),
            np.stack([t3, m03, m13, m23], axis=1),
        ]
        # central octahedron: split along the shortest of the three diagonals
        d1 = np.linalg.norm(newV[m02] - newV[m13], axis=1)  # diagonal (m02, m13)
        d2 = np.linalg.norm(newV[m01] - newV[m23], axis=1)  # diagonal (m01, m23)
        d3 = np.linalg.norm(newV[m12] - newV[m03], axis=1)  # diagonal (m12, m03)
        choice = np.argmin(np.stack([d1, d2, d3], axis=1), axis=1)
        central = []
        splits = {
            0: (lambda: [(m02, m13, m01, m03), (m02, m13, m03, m23),
                         (m02, m13, m23, m12), (m02, m13, m12, m01)]),
            1: (lambda: [(m01, m23, m02, m03), (m01, m23, m03, m13),
                         (m01, m23, m13, m12), (m01, m23, m12, m02)]),
            2: (lambda: [(m12, m03, m01, m02), (m12, m03, m02, m23),
                         (m12, m03, m23, m13), (m12, m03, m13, m01)]),
        }
        for ch, builder in splits.items():
            mask = choice == ch
            for (p, q, r, s) in builder():
                central.append(np.stack([p[mask], q[mask], r[mask], s[mask]], axis=1))
        newC = np.vstack(corner + central)

    newC = _orient_cells(newV, newC)
    facets, owner = _boundary_facets_from_cells(mesh.dim, newC)
    facets = _orient_boundary(newV, newC, facets, owner)
    return SimplicialMesh(mesh.dim, newV, newC, facets, mesh.level + 1,
                          mesh.boundary_projection)


def star_domain_mesh(radius_fn: Callable[[np.ndarray], np.ndarray], level: int,
                     max_radius: float = 3.0) -> SimplicialMesh:
    """Planar star-shaped domain: image of the unit disk mesh under
    ``x -> radius_fn(theta) * x`` with the origin fixed.

    ``radius_fn`` takes polar angles (vectorized) and must stay within
    [0.2, max_radius].
    """
    base = unit_ball_mesh(2, level)
    theta_check = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    rvals = np.asarray(radius_fn(theta_check), dtype=float)
    if rvals.min() < 0.2 - 1e-12 or rvals.max() > max_radius + 1e-12:
        raise ValueError(
            f"radius function range [{rvals.min():.4g}, {rvals.max():.4g}] "
            f"violates the [0.2, {max_radius:.4g}] bound")

    V = base.vertices
    theta = np.arctan2(V[:, 1], V[:, 0])
    scale = np.asarray(radius_fn(theta), dtype=float)
    scale[np.linalg.norm(V, axis=1) == 0.0] = 1.0  # origin fixed
    newV = V * scale[:, None]

    def snap(x):
        t = np.arctan2(x[..., 1], x[..., 0])
        r = np.asarray(radius_fn(t), dtype=float)
        n = np.linalg.norm(x, axis=-1)
        return x * (r / n)[..., None]

    cells = _orient_cells(newV, base.cells)
    facets, owner = _boundary_facets_from_cells(2, cells)
    facets = _orient_boundary(newV, cells, facets, owner)
    return SimplicialMesh(2, newV, cells, facets, level, snap)


# ---------------------------------------------------------------------------
# measures and quality
# ---------------------------------------------------------------------------

def cell_volumes(mesh: SimplicialMesh) -> np.ndarray:
    e = mesh.vertices[mesh.cells[:, 1:]] - mesh.vertices[mesh.cells[:, :1]]
    det = np.linalg.det(e)
    fact = 2.0 if mesh.dim == 2 else 6.0
    return det / fact


def boundary_facet_measures(mesh: SimplicialMesh) -> np.ndarray:
    """Euclidean lengths/areas of the boundary facets."""
    V, F = mesh.vertices, mesh.boundary_facets
    if mesh.dim == 2:
        return np.linalg.norm(V[F[:, 1]] - V[F[:, 0]], axis=1)
    u = V[F[:, 1]] - V[F[:, 0]]
    v = V[F[:, 2]] - V[F[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(u, v), axis=1)


def cell_quality(mesh: SimplicialMesh) -> np.ndarray:
    """Inradius / circumradius per cell (equilateral simplex: 0.5 in 2D,
    1/3 in 3D)."""
    V, C = mesh.vertices, mesh.cells
    vol = np.abs(cell_volumes(mesh))
    if mesh.dim == 2:
        a = np.linalg.norm(V[C[:, 1]] - V[C[:, 2]], axis=1)
        b = np.linalg.norm(V[C[:, 0]] - V[C[:, 2]], axis=1)
        c = np.linalg.norm(V[C[:, 0]] - V[C[:, 1]], axis=1)
        s = 0.5 * (a + b + c)
        inr = vol / s
        circ = a * b * c / (4.0 * vol)
        return inr / circ
    # tetrahedra: inradius = 3V / (total face area); circumradius from the
    # Cayley-Menger-style formula via opposite-edge products
    def face_area(i, j, k):
        u = V[C[:, j]] - V[C[:, i]]
        w = V[C[:, k]] - V[C[:, i]]
        return 0.5 * np.linalg.norm(np.cross(u, w), axis=1)

    area = face_area(0, 1, 2) + face_area(0, 1, 3) + face_area(0, 2, 3) + face_area(1, 2, 3)
    inr = 3.0 * vol / area
    ea = np.linalg.norm(V[C[:, 0]] - V[C[:, 1]], axis=1) * \
        np.linalg.norm(V[C[:, 2]] - V[C[:, 3]], axis=1)
    eb = np.linalg.norm(V[C[:, 0]] - V[C[:, 2]], axis=1) * \
        np.linalg.norm(V[C[:, 1]] - V[C[:, 3]], axis=1)
    ec = np.linalg.norm(V[C[:, 0]] - V[C[:, 3]], axis=1) * \
        np.linalg.norm(V[C[:, 1]] - V[C[:, 2]], axis=1)
    p = 0.5 * (ea + eb + ec)
    circ = np.sqrt(np.maximum(p * (p - ea) * (p - eb) * (p - ec), 0.0)) / (6.0 * vol)
    return inr / circ


def euler_characteristic(mesh: SimplicialMesh) -> int:
    edges = _cell_edges(mesh.dim, mesh.cells)
    if mesh.dim == 2:
        return mesh.num_vertices - edges.shape[0] + mesh.num_cells
    faces = np.unique(np.sort(np.vstack([
        mesh.cells[:, c] for c in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    ]), axis=1), axis=0)
    return mesh.num_vertices - edges.shape[0] + faces.shape[0] - mesh.num_cells


# ---------------------------------------------------------------------------
# plain-text export
# ---------------------------------------------------------------------------

def export_mesh(mesh: SimplicialMesh, path) -> None:
    """Write the documented plain-text format: a header line followed by
    ``v`` vertex lines, ``c`` cell lines and ``b`` boundary-facet lines."""
    with open(path, "w") as fh:
        fh.write(f"# steklab mesh dim={mesh.dim} level={mesh.level} "
                 f"vertices={mesh.num_vertices} cells={mesh.num_cells} "
                 f"boundary={mesh.boundary_facets.shape[0]}\n")
        for v in mesh.vertices:
            fh.write("v " + " ".join(repr(float(c)) for c in v) + "\n")
        for c in mesh.cells:
            fh.write("c " + " ".join(str(int(i)) for i in c) + "\n")
        for f in mesh.boundary_facets:
            fh.write("b " + " ".join(str(int(i)) for i in f) + "\n")


def read_mesh(path) -> SimplicialMesh:
    """Read the plain-text format written by :func:`export_mesh`."""
    verts, cells, facets = [], [], []
    dim = level = None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                meta = dict(p.split("=", 1) for p in parts if "=" in p)
                dim = int(meta["dim"])
                level = int(meta["level"])
            elif parts[0] == "v":
                verts.append([float(x) for x in parts[1:]])
            elif parts[0] == "c":
                cells.append([int(x) for x in parts[1:]])
            elif parts[0] == "b":
                facets.append([int(x) for x in parts[1:]])
    return SimplicialMesh(dim, np.array(verts), np.array(cells, dtype=np.int64),
                          np.array(facets, dtype=np.int64), level, None)
