"""Tests for the sparse linear solver front end."""

import numpy as np
import pytest
import scipy.sparse as sp

from safefem.assembly import SparseSystem, apply_essential_bc, assemble, assemble_load
from safefem.mesh import build_unit_square_mesh
from safefem.solver import SolveReport, SolverConfig, solve
from safefem.whitney import dof_map


def toy_system(matrix, rhs):
    mesh = build_unit_square_mesh(1)
    dm = dof_map(mesh, 2)  # 2 cells, matches a 2x2 system
    return SparseSystem(
        matrix=sp.csr_matrix(matrix), rhs=np.asarray(rhs, dtype=float),
        dof_map=dm, k=2, scheme="primal",
    )


def poisson_like_system(n=8, alpha=1.0, beta=(1.0, 0.5)):
    mesh = build_unit_square_mesh(n)
    bvec = np.asarray(beta, dtype=float)
    system = assemble(mesh, 0, alpha, lambda x: np.tile(bvec, (len(x), 1)), gamma=1.0)
    system.rhs[:] = assemble_load(mesh, 0, lambda x: np.ones(len(x)))
    values = {int(i): 0.0 for i in np.nonzero(system.dof_map.boundary)[0]}
    return apply_essential_bc(system, values)


def test_identity_system():
    system = toy_system(np.eye(2), [3.0, -1.0])
    x, report = solve(system)
    np.testing.assert_allclose(x, [3.0, -1.0])
    assert isinstance(report, SolveReport)
    assert report.method == "direct"
    assert report.converged
    assert report.n_dofs == 2


def test_direct_and_iterative_agree():
    system = poisson_like_system()
    xd, rd = solve(system, SolverConfig(method="direct"))
    xi, ri = solve(system, SolverConfig(method="iterative", tol=1e-12))
    assert rd.method == "direct"
    assert ri.method == "iterative"
    assert ri.converged and ri.iterations > 0
    np.testing.assert_allclose(xi, xd, atol=1e-8)
    # residual reported for the iterative run is small
    assert ri.residual <= 1e-10


def test_convection_dominated_solve_finite():
    system = poisson_like_system(n=16, alpha=1e-6)
    x, report = solve(system)
    assert report.converged
    assert np.isfinite(x).all()
    resid = system.matrix @ x - system.rhs
    assert np.linalg.norm(resid) <= 1e-9 * max(np.linalg.norm(system.rhs), 1.0)


def test_auto_method_picks_direct_for_small():
    system = poisson_like_system(n=4)
    _, report = solve(system)
    assert report.method == "direct"


def test_singular_matrix_raises():
    system = toy_system(np.zeros((2, 2)), [1.0, 0.0])
    with pytest.raises(RuntimeError):
        solve(system)


def test_unknown_method_rejected():
    system = toy_system(np.eye(2), [0.0, 0.0])
    with pytest.raises(ValueError):
        solve(system, SolverConfig(method="magic"))


def test_iteration_cap_raises():
    system = poisson_like_system(n=16, alpha=1.0)
    with pytest.raises(RuntimeError):
        solve(system, SolverConfig(method="iterative", tol=1e-14, max_iter=1))
