"""Simplex-averaged (exponentially fitted) assembly of convection-
diffusion forms on Whitney spaces.

The local convective-diffusive matrix couples DOFs through Bernoulli-type
kernels evaluated at drift components along vertex offsets:

* k = 0: edge kernels B_1 on the gradient graph with weights
  ``omega_E = -(grad lam_i, grad lam_j)_T``,
* k = 1 in 3d: face-pair kernels B_2 on the curl graph with weights
  ``omega_FF' = -1/2 ||curl phi_E||^2`` for the shared edge E,
* k = n-1: facet kernels (B_2 in 2d, B_3 in 3d) against the divergence
  with the cell weight ``omega_T = 1/|T|``.

With vanishing drift every matrix degenerates to ``alpha_bar`` times the
Whitney stiffness matrix; with ``alpha_bar = 0`` the kernels switch to
their upwind limits.  ``local_safe_oracle`` provides an independent
evaluation through the conjugated difference operators and the averaging
maps; both routes agree to rounding.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exponential import (
    CellCoefficients,
    _bernoulli_value,
    _eval_at,
    cell_coefficients,
    local_exp_operators,
)
from .mesh import cell_geometry, local_subsimplices
from .quadrature import simplex_rule
from .whitney import (
    DofMap,
    LocalFormMatrix,
    _local_mass_array,
    dof_map,
    facet_outward_signs,
)


@dataclass
class GraphWeights:
    """Sub-simplex weights of the cell graph Laplacian at one degree.

    ``edge`` holds omega_E per local edge (k = 0), ``face_pair`` the
    symmetric omega_FF' table with zero diagonal (k = 1, 3d), ``top`` the
    scalar 1/|T| (k = n-1).  Unused entries are None.
    """

    cell: int
    k: int
    edge: np.ndarray | None = None
    face_pair: np.ndarray | None = None
    top: float | None = None


def graph_weights(mesh, cell_id, k):
    """Graph-Laplacian weights of one cell for degree k."""
    geom = cell_geometry(mesh, cell_id)
    return _graph_weights(geom, k, mesh.dim)


def _graph_weights(geom, k, n):
    g = geom.lambda_grads
    if k == 0:
        edges = local_subsimplices(n, 1)
        w = np.array([-geom.volume * (g[i] @ g[j]) for i, j in edges])
        return GraphWeights(geom.cell, k, edge=w)
    if k == 1 and n == 3:
        faces = local_subsimplices(3, 2)
        W = np.zeros((4, 4))
        for a in range(4):
            for b in range(a + 1, 4):
                i, j = sorted(set(faces[a]) & set(faces[b]))
                cr = np.cross(g[i], g[j])
                W[a, b] = W[b, a] = -2.0 * geom.volume * (cr @ cr)
        return GraphWeights(geom.cell, k, face_pair=W)
    if k == n - 1:
        return GraphWeights(geom.cell, k, top=1.0 / geom.volume)
    raise ValueError(f"no graph weights for k={k} in dimension {n}")


def _local_safe_array(geom, k, coeffs, n):
    eps = coeffs.alpha_bar
    bbar = np.asarray(coeffs.beta_bar, dtype=float)
    t = geom.tangents
    if k == 0:
        g = geom.lambda_grads
        A = np.zeros((n + 1, n + 1))
        for i, j in local_subsimplices(n, 1):
            omega = -geom.volume * (g[i] @ g[j])
            s = float(bbar @ t[i, j])
            bij = _bernoulli_value(eps, (s,))
            bji = _bernoulli_value(eps, (-s,))
            A[j, j] += omega * bji
            A[j, i] -= omega * bij
            A[i, j] -= omega * bji
            A[i, i] += omega * bij
        return A
    if k == 1 and n == 3:
        g = geom.lambda_grads
        edges = local_subsimplices(3, 1)
        eidx = {e: m for m, e in enumerate(edges)}
        faces = local_subsimplices(3, 2)
        A = np.zeros((6, 6))
        for fa in range(4):
            for fb in range(4):
                if fa == fb:
                    continue
                i, j = sorted(set(faces[fa]) & set(faces[fb]))
                kv = next(v for v in faces[fa] if v != i and v != j)
                lv = next(v for v in faces[fb] if v != i and v != j)
                cr = np.cross(g[i], g[j])
                omega = -2.0 * geom.volume * (cr @ cr)
                # trial: boundary cycle i -> j -> kv of the face fa, each
                # directed edge weighted by B_2 at (drift along the edge,
                # drift to the remaining face vertex)
                trial = np.zeros(6)
                for p, q, o in ((i, j, kv), (j, kv, i), (kv, i, j)):
                    val = _bernoulli_value(
                        eps, (float(bbar @ t[p, q]), float(bbar @ t[p, o]))
                    )
                    sgn = 1.0 if p < q else -1.0
                    trial[eidx[(min(p, q), max(p, q))]] += sgn * val
                test = np.zeros(6)
                for p, q in ((i, j), (j, lv), (lv, i)):
                    test[eidx[(min(p, q), max(p, q))]] += 1.0 if p < q else -1.0
                A -= omega * np.outer(test, trial)
        return A
    if k == n - 1:
        facets = local_subsimplices(n, n - 1)
        signs = facet_outward_signs(geom).astype(float)
        coef = np.empty(len(facets))
        for m, fac in enumerate(facets):
            opp = next(v for v in range(n + 1) if v not in fac)
            p = fac[0]
            args = tuple(float(bbar @ t[p, q]) for q in fac[1:]) + (
                float(bbar @ t[p, opp]),
            )
            coef[m] = _bernoulli_value(eps, args)
        return np.outer(signs, signs * coef) / geom.volume
    raise ValueError(f"no convective-diffusive form for k={k} in dimension {n}")


def local_safe_matrix(mesh, cell_id, k, coeffs):
    """Local convective-diffusive matrix via Bernoulli kernels.

    ``coeffs.alpha_bar = 0`` selects the upwind limit branch.
    """
    geom = cell_geometry(mesh, cell_id)
    return LocalFormMatrix(
        cell_id, k, "safe", _local_safe_array(geom, k, coeffs, mesh.dim)
    )


def local_safe_oracle(mesh, cell_id, k, coeffs):
    """Independent local matrix through the averaged-operator route
    (requires ``alpha_bar > 0``): assemble (alpha Pi J w, d v)_T from the
    conjugated difference operator J and the constant-reproducing
    averaging map Pi.
    """
    if not coeffs.alpha_bar > 0 or coeffs.theta_bar is None:
        raise ValueError("oracle route needs alpha_bar > 0 and theta_bar")
    n = mesh.dim
    geom = cell_geometry(mesh, cell_id)
    ops = local_exp_operators(mesh, cell_id, k, coeffs.theta_bar)
    J = ops.j_k
    g = geom.lambda_grads
    scale = coeffs.alpha_bar * geom.volume
    if k == 0:
        edges = local_subsimplices(n, 1)
        P = np.zeros((n, len(edges)))
        for e, (i, j) in enumerate(edges):
            omega = -geom.volume * (g[i] @ g[j])
            P[:, e] = omega * (geom.edge_lengths[e] / geom.volume) * geom.edge_tangents[e]
        return LocalFormMatrix(cell_id, k, "safe-oracle", scale * (g @ (P @ J)))
    if k == 1 and n == 3:
        W = _graph_weights(geom, k, n).face_pair
        signs = facet_outward_signs(geom).astype(float)
        n_out = signs[:, None] * geom.facet_normals
        P = np.zeros((3, 4))
        for fa in range(4):
            acc = np.zeros(3)
            for fb in range(4):
                if fb != fa:
                    acc += W[fa, fb] * (geom.facet_measures[fb] / geom.volume) * n_out[fb]
            P[:, fa] = signs[fa] * acc
        edges = local_subsimplices(3, 1)
        curls = np.array([2.0 * np.cross(g[i], g[j]) for i, j in edges])
        return LocalFormMatrix(cell_id, k, "safe-oracle", scale * (curls @ (P @ J)))
    if k == n - 1:
        signs = facet_outward_signs(geom).astype(float)
        div_rows = signs / geom.volume
        fvals = J[0] / geom.volume
        return LocalFormMatrix(
            cell_id, k, "safe-oracle", scale * np.outer(div_rows, fvals)
        )
    raise ValueError(f"no oracle form for k={k} in dimension {n}")


def _basis_values(geom, k, pts, n):
    """Local basis values at points, geometry-only version."""
    g = geom.lambda_grads
    lam = 1.0 / (n + 1) + (pts - geom.barycenter) @ g.T
    if k == 0:
        return lam
    if k == n:
        return np.full((pts.shape[0], 1), 1.0 / geom.volume)
    if n == 3 and k == 1:
        edges = local_subsimplices(3, 1)
        vals = np.empty((pts.shape[0], 6, 3))
        for e, (i, j) in enumerate(edges):
            vals[:, e, :] = lam[:, i, None] * g[j] - lam[:, j, None] * g[i]
        return vals
    facets = local_subsimplices(n, n - 1)
    signs = facet_outward_signs(geom)
    vals = np.empty((pts.shape[0], len(facets), n))
    for m, fac in enumerate(facets):
        opp = next(i for i in range(n + 1) if i not in fac)
        vals[:, m, :] = (signs[m] / (n * geom.volume)) * (pts - geom.vertices[opp])
    return vals


def _weighted_mass(geom, k, gamma, n, degree):
    """Local mass matrix weighted by the reaction coefficient."""
    if not callable(gamma):
        return float(gamma) * _local_mass_array(geom, k)
    pts, wts = simplex_rule(geom.vertices, degree)
    gvals = _eval_at(gamma, pts) * wts
    vals = _basis_values(geom, k, pts, n)
    if vals.ndim == 2:
        return np.einsum("q,qa,qb->ab", gvals, vals, vals)
    return np.einsum("q,qad,qbd->ab", gvals, vals, vals)


@dataclass
class SparseSystem:
    """Assembled linear system with its DOF context."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    k: int
    scheme: str
    constrained: dict = field(default_factory=dict)


def assemble(mesh, k, alpha, beta, gamma=0.0, scheme="primal", quad_degree=4):
    """Assemble the global convective-diffusive(-reactive) matrix.

    ``alpha`` is a positive constant or positive vectorized callable; the
    literal constant 0 selects the upwind limit scheme (then the drift is
    averaged as ``beta(x_c)`` per cell).  The dual scheme is the
    transpose of the primal matrix.

    Returns a SparseSystem with a zero right-hand side.
    """
    if scheme not in ("primal", "dual"):
        raise ValueError(f"unknown scheme {scheme!r}")
    n = mesh.dim
    dm = dof_map(mesh, k)
    limit_mode = not callable(alpha) and float(np.asarray(alpha)) == 0.0
    nloc = dm.cell_dofs.shape[1]
    ncells = mesh.num_cells
    blocks = np.empty((ncells, nloc, nloc))
    with_mass = callable(gamma) or float(np.asarray(gamma)) != 0.0
    for cid in range(ncells):
        geom = cell_geometry(mesh, cid)
        if limit_mode:
            bbar = _eval_at(beta, geom.barycenter[None, :])[0]
            coeffs = CellCoefficients(0.0, None, bbar, gamma)
        else:
            coeffs = _cell_coefficients_from_geom(geom, alpha, beta, gamma, quad_degree)
        A = _local_safe_array(geom, k, coeffs, n)
        if with_mass:
            A = A + _weighted_mass(geom, k, gamma, n, quad_degree)
        blocks[cid] = A
    rows = np.repeat(dm.cell_dofs, nloc, axis=1).ravel()
    cols = np.tile(dm.cell_dofs, (1, nloc)).ravel()
    mat = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(dm.num_dofs, dm.num_dofs)
    ).tocsr()
    if scheme == "dual":
        mat = mat.T.tocsr()
    return SparseSystem(
        matrix=mat,
        rhs=np.zeros(dm.num_dofs),
        dof_map=dm,
        k=k,
        scheme=scheme,
    )


def _cell_coefficients_from_geom(geom, alpha, beta, gamma, degree):
    xc = geom.barycenter[None, :]
    alpha_c = float(_eval_at(alpha, xc)[0])
    if not alpha_c > 0:
        raise ValueError(f"alpha <= 0 at barycenter of cell {geom.cell}")
    if callable(alpha):
        pts, wts = simplex_rule(geom.vertices, degree)
        alpha_bar = float(_eval_at(alpha, pts) @ wts) / geom.volume
        if not alpha_bar > 0:
            raise ValueError(f"alpha has nonpositive mean on cell {geom.cell}")
    else:
        alpha_bar = alpha_c
    theta_bar = _eval_at(beta, xc)[0] / alpha_c
    return CellCoefficients(alpha_bar, theta_bar, alpha_bar * theta_bar, gamma)


def assemble_load(mesh, k, f, degree=4, neumann=None, g=None):
    """Load vector of (f, phi_S) plus optional natural boundary data.

    ``neumann`` is an iterable of boundary facet ids paired with the
    boundary density ``g``: for k = 0 a scalar integrated against the
    vertex traces, for k = n-1 a scalar against the outward normal
    component, for the 3d edge space a vector integrated against the
    basis on the facet.
    """
    n = mesh.dim
    dm = dof_map(mesh, k)
    rhs = np.zeros(dm.num_dofs)
    for cid in range(mesh.num_cells):
        geom = cell_geometry(mesh, cid)
        pts, wts = simplex_rule(geom.vertices, degree)
        fvals = np.asarray(f(pts), dtype=float)
        vals = _basis_values(geom, k, pts, n)
        if vals.ndim == 2:
            loc = np.einsum("q,qa->a", fvals * wts, vals)
        else:
            loc = np.einsum("qd,qad->a", fvals * wts[:, None], vals)
        np.add.at(rhs, dm.cell_dofs[cid], loc)
    if neumann is not None:
        if g is None:
            raise ValueError("neumann facets given without boundary data g")
        rhs += _natural_boundary_load(mesh, k, neumann, g, degree)
    return rhs


def _natural_boundary_load(mesh, k, facet_ids, g, degree):
    n = mesh.dim
    dm = dof_map(mesh, k)
    rhs = np.zeros(dm.num_dofs)
    # adjacent cell of each facet
    facet_cell = np.full(mesh.num_entities(n - 1), -1, dtype=np.int64)
    for cid in range(mesh.num_cells):
        facet_cell[mesh.cell_entities[n - 1][cid]] = cid
    for fid in facet_ids:
        fverts = mesh.vertices[mesh.simplices[n - 1][fid]]
        pts, wts = simplex_rule(fverts, degree)
        gvals = np.asarray(g(pts), dtype=float)
        cid = int(facet_cell[fid])
        geom = cell_geometry(mesh, cid)
        loc_f = list(mesh.cell_entities[n - 1][cid]).index(fid)
        if k == 0:
            # vertex traces are the facet barycentric coordinates
            lam = 1.0 / (n + 1) + (pts - geom.barycenter) @ geom.lambda_grads.T
            for li, gv in enumerate(mesh.cells[cid]):
                rhs[gv] += np.sum(wts * gvals * lam[:, li])
        elif k == n - 1:
            sgn = float(facet_outward_signs(geom)[loc_f])
            area = geom.facet_measures[loc_f]
            rhs[fid] += sgn / area * np.sum(wts * gvals)
        elif k == 1 and n == 3:
            vals = _basis_values(geom, k, pts, n)
            loc = np.einsum("qd,qad->a", gvals * wts[:, None], vals)
            np.add.at(rhs, dm.cell_dofs[cid], loc)
        else:
            raise ValueError(f"no natural boundary pairing for k={k}")
    return rhs


def apply_essential_bc(system, boundary_values):
    """Constrain DOFs to prescribed values by row replacement with
    right-hand-side column correction.

    ``boundary_values`` maps DOF ids to values and must cover every
    boundary-flagged DOF of the system; additional (interior) pins are
    allowed.  Returns a new SparseSystem.
    """
    dm = system.dof_map
    flagged = set(np.nonzero(dm.boundary)[0].tolist())
    missing = flagged - set(int(i) for i in boundary_values)
    if missing:
        raise ValueError(
            f"missing boundary values for {len(missing)} flagged DOFs, "
            f"first: {sorted(missing)[:5]}"
        )
    ndof = dm.num_dofs
    mask = np.zeros(ndof, dtype=bool)
    xc = np.zeros(ndof)
    for dof, val in boundary_values.items():
        mask[int(dof)] = True
        xc[int(dof)] = float(val)
    keep = sp.diags((~mask).astype(float))
    A = system.matrix
    b = system.rhs - A @ xc
    A = keep @ A @ keep + sp.diags(mask.astype(float))
    b[mask] = xc[mask]
    return SparseSystem(
        matrix=A.tocsr(),
        rhs=b,
        dof_map=dm,
        k=system.k,
        scheme=system.scheme,
        constrained={int(d): float(v) for d, v in boundary_values.items()},
    )
