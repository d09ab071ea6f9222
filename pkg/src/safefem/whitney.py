"""Lowest-order Whitney form spaces on a simplicial complex.

The four species, indexed by form degree k, are

* k = 0: continuous piecewise linears (hat functions), point DOFs,
* k = 1 in 3d: edge elements ``lam_i grad lam_j - lam_j grad lam_i`` with
  tangential edge integrals as DOFs,
* k = n-1: facet elements ``sigma (x - a_opp) / (n |T|)`` with normal
  facet fluxes as DOFs (in 2d this is the k = 1 space),
* k = n: piecewise constants ``1/|T|`` with cell integrals as DOFs.

DOF orientations follow the sorted-vertex conventions of
:mod:`safefem.mesh`: tangents run low to high vertex id, facet normals are
the sorted-order normals.  Cells store their vertices sorted, so local
and global orientations coincide and all cell-to-DOF signs are +1.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import cell_geometry, local_subsimplices
from .quadrature import reference_simplex_rule


def num_local_dofs(n, k):
    return math.comb(n + 1, k + 1)


@dataclass(frozen=True)
class DofMap:
    """Cell-to-global DOF connectivity for the degree-k space."""

    k: int
    num_dofs: int
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    boundary: np.ndarray


def dof_map(mesh, k):
    """DofMap of the degree-k Whitney space; DOF ids are entity ids."""
    if not 0 <= k <= mesh.dim:
        raise ValueError(f"no degree-{k} space in dimension {mesh.dim}")
    cell_dofs = mesh.cell_entities[k]
    return DofMap(
        k=k,
        num_dofs=mesh.num_entities(k),
        cell_dofs=cell_dofs,
        cell_signs=np.ones_like(cell_dofs, dtype=np.int8),
        boundary=mesh.boundary[k].copy(),
    )


def facet_outward_signs(geom):
    """+1 where the stored facet normal points out of the cell."""
    n = geom.vertices.shape[1]
    facets = local_subsimplices(n, n - 1)
    signs = np.empty(len(facets), dtype=np.int8)
    for m, fac in enumerate(facets):
        opp = next(i for i in range(n + 1) if i not in fac)
        mid = geom.vertices[list(fac)].mean(axis=0)
        signs[m] = 1 if geom.facet_normals[m] @ (mid - geom.vertices[opp]) > 0 else -1
    return signs


def incidence(mesh, k):
    """Signed incidence matrix D^k mapping degree-k DOFs to degree-(k+1)
    DOFs, as an integer CSR matrix.  D^{k+1} D^k = 0 holds exactly.
    """
    n = mesh.dim
    if not 0 <= k < n:
        raise ValueError(f"no incidence D^{k} in dimension {n}")
    rows, cols, vals = [], [], []
    if k == 0:
        edges = mesh.simplices[1]
        ne = edges.shape[0]
        rows = np.repeat(np.arange(ne), 2)
        cols = edges[:, ::-1].ravel()  # (hi, lo) per row
        vals = np.tile([1, -1], ne)
        shape = (ne, mesh.num_entities(0))
    elif n == 3 and k == 1:
        faces = mesh.simplices[2]
        edge_ids = {tuple(e): i for i, e in enumerate(mesh.simplices[1].tolist())}
        rows, cols, vals = [], [], []
        for fi, (a, b, c) in enumerate(faces.tolist()):
            # boundary cycle a -> b -> c -> a, right-handed about the
            # sorted-order face normal
            for tail, head, sgn in ((a, b, 1), (b, c, 1), (a, c, -1)):
                rows.append(fi)
                cols.append(edge_ids[(tail, head)])
                vals.append(sgn)
        shape = (faces.shape[0], mesh.num_entities(1))
    else:
        # facets -> cells: outward flux signs
        rows, cols, vals = [], [], []
        for cid in range(mesh.num_cells):
            signs = facet_outward_signs(cell_geometry(mesh, cid))
            for loc, ent in enumerate(mesh.cell_entities[n - 1][cid]):
                rows.append(cid)
                cols.append(int(ent))
                vals.append(int(signs[loc]))
        shape = (mesh.num_cells, mesh.num_entities(n - 1))
    return sp.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (np.asarray(rows), np.asarray(cols))),
        shape=shape,
    )


def local_incidence(geom, k):
    """Local incidence D^k of one cell (rows: (k+1)-subsimplices, cols:
    k-subsimplices), matching the global conventions."""
    n = geom.vertices.shape[1]
    if not 0 <= k < n:
        raise ValueError(f"no incidence D^{k} in dimension {n}")
    lo = local_subsimplices(n, k)
    hi = local_subsimplices(n, k + 1)
    col = {s: i for i, s in enumerate(lo)}
    D = np.zeros((len(hi), len(lo)), dtype=np.int64)
    if k == 0:
        for r, (i, j) in enumerate(hi):
            D[r, j] = 1
            D[r, i] = -1
    elif n == 3 and k == 1:
        for r, (a, b, c) in enumerate(hi):
            D[r, col[(a, b)]] = 1
            D[r, col[(b, c)]] = 1
            D[r, col[(a, c)]] = -1
    else:
        D[0, :] = facet_outward_signs(geom)
    return D


@dataclass
class WhitneyBasis:
    """Values (and exterior-derivative proxies) of all local basis
    functions at a batch of points.

    ``values`` has shape (npts, nloc) for scalar species and
    (npts, nloc, dim) for vector species.  ``d_values`` holds gradients
    for k = 0, curls for the 3d edge space, divergences for the facet
    space and zeros for k = n; constant-per-cell proxies are returned
    without a point axis.
    """

    cell: int
    k: int
    values: np.ndarray
    d_values: np.ndarray


def eval_basis(mesh, cell_id, k, points, tol=1e-10):
    """Evaluate the local degree-k basis at physical points of one cell.

    Raises ValueError when a point lies outside the cell beyond ``tol``
    (in barycentric coordinates).
    """
    n = mesh.dim
    geom = cell_geometry(mesh, cell_id)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = geom.lambda_grads
    lam = 1.0 / (n + 1) + (pts - geom.barycenter) @ g.T
    if np.any(lam < -tol) or np.any(lam > 1.0 + tol):
        raise ValueError(
            f"point outside cell {cell_id}: barycentric range "
            f"[{lam.min():.3e}, {lam.max():.3e}]"
        )
    if k == 0:
        return WhitneyBasis(cell_id, k, lam, g.copy())
    if k == n:
        vals = np.full((pts.shape[0], 1), 1.0 / geom.volume)
        return WhitneyBasis(cell_id, k, vals, np.zeros((1,)))
    if n == 3 and k == 1:
        edges = local_subsimplices(3, 1)
        vals = np.empty((pts.shape[0], len(edges), 3))
        curls = np.empty((len(edges), 3))
        for e, (i, j) in enumerate(edges):
            vals[:, e, :] = lam[:, i, None] * g[j] - lam[:, j, None] * g[i]
            curls[e] = 2.0 * np.cross(g[i], g[j])
        return WhitneyBasis(cell_id, k, vals, curls)
    # facet space k = n-1
    facets = local_subsimplices(n, n - 1)
    signs = facet_outward_signs(geom)
    vals = np.empty((pts.shape[0], len(facets), n))
    divs = np.empty(len(facets))
    for m, fac in enumerate(facets):
        opp = next(i for i in range(n + 1) if i not in fac)
        coef = signs[m] / (n * geom.volume)
        vals[:, m, :] = coef * (pts - geom.vertices[opp])
        divs[m] = signs[m] / geom.volume
    return WhitneyBasis(cell_id, k, vals, divs)


def _entity_frames(mesh, k, entity_ids):
    """Vertex coords, measures and DOF direction vectors of k-entities."""
    n = mesh.dim
    verts = mesh.vertices[mesh.simplices[k][entity_ids]]
    if k == 0:
        return verts, np.ones(len(entity_ids)), None
    if k == 1:
        tan = verts[:, 1] - verts[:, 0]
        lengths = np.linalg.norm(tan, axis=1)
        unit = tan / lengths[:, None]
        if n == 2:
            # facet role: clockwise-rotated tangent as normal direction
            direction = np.column_stack([unit[:, 1], -unit[:, 0]])
        else:
            direction = unit
        return verts, lengths, direction
    if n == 3 and k == 2:
        cr = np.cross(verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0])
        areas = 0.5 * np.linalg.norm(cr, axis=1)
        return verts, areas, cr / (2.0 * areas[:, None])
    # k == n: cell integral
    mats = verts[:, 1:] - verts[:, :1]
    dets = np.abs(np.linalg.det(mats))
    return verts, dets / math.factorial(n), None


def canonical_interpolate(mesh, k, field, degree=4, entities=None):
    """Canonical DOFs of a field: point values, tangential edge
    integrals, normal facet fluxes or cell integrals.

    ``field`` must accept an (npts, dim) array and return (npts,) for
    scalar species or (npts, dim) for vector species.  When ``entities``
    is given only those DOFs are computed; others stay zero.

    Returns the DOF vector.
    """
    n = mesh.dim
    if not 0 <= k <= n:
        raise ValueError(f"no degree-{k} space in dimension {n}")
    ids = np.arange(mesh.num_entities(k)) if entities is None else np.asarray(entities)
    out = np.zeros(mesh.num_entities(k))
    if len(ids) == 0:
        return out
    if k == 0:
        pts = mesh.vertices[mesh.simplices[0][ids, 0]]
        out[ids] = np.asarray(field(pts), dtype=float)
        return out
    verts, measures, direction = _entity_frames(mesh, k, ids)
    ref_pts, ref_wts = reference_simplex_rule(k, degree)
    # physical quadrature points for all entities at once
    pts = verts[:, 0, None, :] + np.einsum(
        "qm,emn->eqn", ref_pts, verts[:, 1:] - verts[:, :1]
    )
    flat = pts.reshape(-1, n)
    fvals = np.asarray(field(flat), dtype=float)
    scale = measures * math.factorial(k)  # ref weights sum to 1/k!
    if k == n:
        fvals = fvals.reshape(len(ids), -1)
        out[ids] = (fvals @ ref_wts) * scale
    else:
        fvals = fvals.reshape(len(ids), -1, n)
        comp = np.einsum("eqn,en->eq", fvals, direction)
        out[ids] = (comp @ ref_wts) * scale
    return out


@dataclass
class LocalFormMatrix:
    """Dense local form matrix with its provenance."""

    cell: int
    k: int
    kind: str
    matrix: np.ndarray


def _lambda_products(n, volume):
    """Matrix of integrals of lam_a lam_b over the cell."""
    c = volume / ((n + 1) * (n + 2))
    return c * (np.ones((n + 1, n + 1)) + np.eye(n + 1))


def _local_mass_array(geom, k):
    n = geom.vertices.shape[1]
    if k == 0:
        return _lambda_products(n, geom.volume)
    if k == n:
        return np.array([[1.0 / geom.volume]])
    if n == 3 and k == 1:
        g = geom.lambda_grads
        gg = g @ g.T
        C = _lambda_products(n, geom.volume)
        edges = local_subsimplices(3, 1)
        M = np.empty((6, 6))
        for e, (i, j) in enumerate(edges):
            for f, (p, q) in enumerate(edges):
                M[e, f] = (
                    C[i, p] * gg[j, q]
                    - C[i, q] * gg[j, p]
                    - C[j, p] * gg[i, q]
                    + C[j, q] * gg[i, p]
                )
        return M
    # facet space
    facets = local_subsimplices(n, n - 1)
    signs = facet_outward_signs(geom)
    verts = geom.vertices
    vol = geom.volume
    vsum = verts.sum(axis=0)
    # second moment: int x.x dx
    s2 = vol / ((n + 1) * (n + 2)) * ((verts * verts).sum() + vsum @ vsum)
    m1 = vol * geom.barycenter
    M = np.empty((len(facets), len(facets)))
    for a, fa in enumerate(facets):
        oa = verts[next(i for i in range(n + 1) if i not in fa)]
        for b, fb in enumerate(facets):
            ob = verts[next(i for i in range(n + 1) if i not in fb)]
            val = s2 - ob @ m1 - oa @ m1 + (oa @ ob) * vol
            M[a, b] = signs[a] * signs[b] * val / (n * vol) ** 2
    return M


def _local_stiffness_array(geom, k):
    n = geom.vertices.shape[1]
    if k == 0:
        g = geom.lambda_grads
        return geom.volume * (g @ g.T)
    if k == n:
        return np.zeros((1, 1))
    if n == 3 and k == 1:
        g = geom.lambda_grads
        edges = local_subsimplices(3, 1)
        curls = np.array([2.0 * np.cross(g[i], g[j]) for i, j in edges])
        return geom.volume * (curls @ curls.T)
    signs = facet_outward_signs(geom).astype(float)
    return np.outer(signs, signs) / geom.volume


def local_mass(mesh, cell_id, k):
    """Local mass matrix (exact, unweighted) of the degree-k space."""
    geom = cell_geometry(mesh, cell_id)
    return LocalFormMatrix(cell_id, k, "mass", _local_mass_array(geom, k))


def local_stiffness(mesh, cell_id, k):
    """Local matrix of (d phi_S, d phi_S') over one cell."""
    geom = cell_geometry(mesh, cell_id)
    return LocalFormMatrix(cell_id, k, "stiffness", _local_stiffness_array(geom, k))
