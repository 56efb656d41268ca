import logging

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import p1_mass, p1_stiffness
from tensorform.artifact import compile_form
from tensorform.assembly import (
    CoefficientFunction,
    apply_dirichlet,
    assemble,
    assemble_action,
    boundary_dofs,
    interpolate,
    write_matrix_market,
    write_vector,
)
from tensorform.demos import solve_elasticity
from tensorform.dofmap import generate_dofmap
from tensorform.errors import AssemblyError, CGNotConverged
from tensorform.forms.dsl import BasisFunction, FiniteElement, Function, dot, dx, grad
from tensorform.mesh import build_mesh, unit_cube, unit_square
from tensorform.solvers import solve_cg


def p1(cell):
    e = FiniteElement("Lagrange", cell, 1)
    v, U, w = BasisFunction(e), BasisFunction(e), Function(e)
    return {
        "mass": compile_form(v * U * dx),
        "stiffness": compile_form(dot(grad(v), grad(U)) * dx),
        "action": compile_form(dot(grad(v), grad(w)) * dx),
        "load": compile_form(v * w * dx),
    }


@pytest.fixture(scope="module")
def tri():
    return p1("triangle")


@pytest.fixture(scope="module")
def tet():
    return p1("tetrahedron")


@pytest.mark.parametrize("dim", [2, 3])
def test_mass_sum_and_stiffness_kernel(dim, tri, tet):
    forms = tri if dim == 2 else tet
    mesh = unit_square(4) if dim == 2 else unit_cube(3)
    M = assemble(forms["mass"], mesh)
    A = assemble(forms["stiffness"], mesh)
    assert abs(M.sum() - 1.0) <= 1e-12
    assert np.abs(A @ np.ones(A.shape[0])).max() <= 1e-12
    assert abs(A - A.T).max() <= 1e-14


def test_two_cell_hand_assembly(tri):
    X = np.array([[0.0, 0.0], [2.0, 0.0], [0.3, 1.0], [1.7, 1.5]])
    mesh = build_mesh(X, [[0, 1, 2], [1, 3, 2]])
    expected = np.zeros((4, 4))
    for c in mesh.cells:
        expected[np.ix_(c, c)] += p1_stiffness(X[c])
    assert np.abs(assemble(tri["stiffness"], mesh).toarray() - expected).max() <= 1e-13
    expected = np.zeros((4, 4))
    for c in mesh.cells:
        expected[np.ix_(c, c)] += p1_mass(X[c])
    assert np.abs(assemble(tri["mass"], mesh).toarray() - expected).max() <= 1e-14


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_action_equals_matrix_vector_product(seed):
    forms = p1("triangle")
    mesh = unit_square(4)
    V = generate_dofmap(forms["stiffness"].form.arguments[0], mesh)
    U = np.random.default_rng(seed).standard_normal(V.size)
    A = assemble(forms["stiffness"], mesh, [V, V])
    w = assemble_action(forms["action"], mesh, CoefficientFunction(V, U), [V])
    assert np.abs(w - A @ U).max() <= 1e-10


def test_action_edge_cases(tri):
    mesh = unit_square(4)
    V = generate_dofmap(tri["mass"].form.arguments[0], mesh)
    zero = assemble_action(tri["action"], mesh, CoefficientFunction(V, np.zeros(V.size)), [V])
    assert not zero.any()
    ones = assemble_action(tri["load"], mesh, CoefficientFunction(V, np.ones(V.size)), [V])
    assert abs(ones.sum() - 1.0) <= 1e-12
    with pytest.raises(AssemblyError, match="missing coefficient"):
        assemble_action(tri["action"], mesh, None, [V])
    with pytest.raises(AssemblyError):
        CoefficientFunction(V, np.zeros(3))


def test_interpolation_reproduces_linear_functions(tri):
    mesh = unit_square(3)
    V = generate_dofmap(FiniteElement("Lagrange", "triangle", 2), mesh)
    u = interpolate(lambda x: 1 + 2 * x[:, 0] - x[:, 1], V, mesh)
    from tensorform.dofmap import dof_coordinates

    X = dof_coordinates(V, mesh)
    assert np.abs(u.values - (1 + 2 * X[:, 0] - X[:, 1])).max() <= 1e-14


def test_assembly_errors(tri, tet):
    mesh = unit_square(2)
    with pytest.raises(AssemblyError, match="coefficient"):
        assemble(tri["load"], mesh)
    V = generate_dofmap(FiniteElement("Lagrange", "triangle", 2), mesh)
    with pytest.raises(AssemblyError, match="dofmap"):
        assemble(tri["mass"], mesh, [V, V])
    with pytest.raises(AssemblyError, match="expected 2 dofmap"):
        assemble(tri["mass"], mesh, [V])


@pytest.mark.parametrize("mode", ["quadrature", "schedule"])
def test_assembly_modes_agree(mode):
    e = FiniteElement("Lagrange", "tetrahedron", 2)
    v, U = BasisFunction(e), BasisFunction(e)
    compiled = compile_form(dot(grad(v), grad(U)) * dx, optimize=True)
    mesh = unit_cube(2)
    ref = assemble(compiled, mesh)
    other = assemble(compiled, mesh, mode=mode)
    assert abs(ref - other).max() <= 1e-10 * abs(ref).max()


def test_dirichlet_rows(tri):
    mesh = unit_square(3)
    V = generate_dofmap(tri["stiffness"].form.arguments[0], mesh)
    A = assemble(tri["stiffness"], mesh, [V, V])
    dofs = boundary_dofs(V, mesh)
    assert len(dofs) == 12
    B, b = apply_dirichlet(A, np.ones(V.size), dofs, 2.0)
    for k in dofs:
        row = B.getrow(k)
        assert row.nnz == 1 and row[0, k] == 1.0
        assert b[k] == 2.0
    assert abs(B - B.T).max() <= 1e-14
    left = boundary_dofs(V, mesh, lambda x: x[0] < 1e-12)
    assert len(left) == 4


def test_dirichlet_on_every_dof_gives_identity(tri, caplog):
    mesh = unit_square(1)
    V = generate_dofmap(tri["stiffness"].form.arguments[0], mesh)
    A = assemble(tri["stiffness"], mesh, [V, V])
    B, b = apply_dirichlet(A, np.zeros(4), np.arange(4), [1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(B.toarray(), np.eye(4))
    x, _ = solve_cg(B, b)
    assert np.allclose(x, [1, 2, 3, 4])
    with caplog.at_level(logging.WARNING):
        apply_dirichlet(A, np.zeros(4), [])
    assert "no dofs" in caplog.text


def test_cg_small_systems():
    x, info = solve_cg(sp.identity(5, format="csr"), np.arange(5.0))
    assert np.allclose(x, np.arange(5.0)) and info["iterations"] <= 1
    A = sp.csr_matrix([[2.0, -1.0], [-1.0, 2.0]])
    x, _ = solve_cg(A, np.array([1 / 3, 1 / 3]) @ A.toarray())
    assert np.abs(x - 1 / 3).max() <= 1e-12
    x, _ = solve_cg(A, np.zeros(2))
    assert not x.any()


def test_cg_failure_reports_history():
    A = sp.csr_matrix(np.diag([1.0, -1.0]))
    with pytest.raises(CGNotConverged) as exc:
        solve_cg(A, np.array([1.0, 1.0]), jacobi=False)
    assert exc.value.residual_history
    n = 200
    L = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(n, n), format="csr")
    with pytest.raises(CGNotConverged, match="did not converge in 3"):
        solve_cg(L, np.ones(n), max_iter=3, jacobi=False)


def test_poisson_solution_residual(tri):
    mesh = unit_square(8)
    V = generate_dofmap(tri["stiffness"].form.arguments[0], mesh)
    A = assemble(tri["stiffness"], mesh, [V, V])
    f = CoefficientFunction(V, np.ones(V.size))
    b = assemble(tri["load"], mesh, [V], [f])
    A, b = apply_dirichlet(A, b, boundary_dofs(V, mesh))
    x, info = solve_cg(A, b, rtol=1e-10)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert info["residuals"][-1] <= 1e-10 * np.linalg.norm(b)
    assert x.max() > 0


def test_elasticity_symmetry_and_rigid_translations():
    out = solve_elasticity(n=2, length=2.0)
    assert out["asymmetry"] <= 1e-10
    assert out["translation_residual"] <= 1e-10
    assert out["max_displacement"] > 0


def test_exports(tmp_path, tri):
    from scipy.io import mmread

    A = assemble(tri["stiffness"], unit_square(2))
    write_matrix_market(A, tmp_path / "A.mtx")
    assert abs(sp.csr_matrix(mmread(str(tmp_path / "A.mtx"))) - A).max() <= 1e-15
    write_vector(np.arange(3.0), tmp_path / "x.txt")
    assert np.array_equal(np.loadtxt(tmp_path / "x.txt"), np.arange(3.0))
