from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    POISSON_P2_TABLE,
    oracle_scalar_forms,
    oracle_vector_forms,
    p1_mass,
    p1_stiffness,
    random_simplices,
)
from tensorform.errors import DegenerateCell
from tensorform.fiat.elements import lagrange_nodes
from tensorform.forms.dsl import D, BasisFunction, FiniteElement, Function, Index, VectorElement, dot, dx, grad, transp
from tensorform.forms.lowering import lower
from tensorform.tensorrep import (
    cell_geometry,
    compute_reference_tensor,
    element_tensor_quadrature,
    element_tensors,
    flop_count,
    snap_rationals,
    to_latex,
)

CELL_DIM = {"triangle": 2, "tetrahedron": 3}


def scalar_forms(cell, q):
    e = FiniteElement("Lagrange", cell, q)
    v, U = BasisFunction(e), BasisFunction(e)
    return {"mass": lower(v * U * dx), "poisson": lower(dot(grad(v), grad(U)) * dx)}


def vector_forms(cell, q):
    e = VectorElement("Lagrange", cell, q)
    v, U, w = BasisFunction(e), BasisFunction(e), Function(e)
    i, j = Index(), Index()
    eps = lambda u: 0.5 * (grad(u) + transp(grad(u)))
    return {
        "convection": lower(v[i] * w[j] * D(U[i], j) * dx),
        "strain": lower(dot(eps(v), eps(U)) * dx),
    }


def test_poisson_p2_reference_tensor_matches_table():
    ref = compute_reference_tensor(scalar_forms("triangle", 2)["poisson"])
    (term,) = ref.terms
    assert term.A0.shape == (6, 6, 2, 2)
    table = np.array(POISSON_P2_TABLE).reshape(6, 6, 2, 2)
    assert term.exact is not None
    assert np.all(6 * term.exact == table.astype(object))
    assert np.abs(6 * term.A0 - table).max() <= 1e-12
    assert term.exact[0, 0, 0, 0] == Fraction(1, 2)
    assert term.exact[0, 1, 0, 0] == Fraction(1, 6)


@pytest.mark.parametrize("cell", ["triangle", "tetrahedron"])
def test_p1_against_closed_forms(cell):
    rng = np.random.default_rng(3)
    V = random_simplices(CELL_DIM[cell], 20, rng)
    forms = scalar_forms(cell, 1)
    M = element_tensors(compute_reference_tensor(forms["mass"]), V)
    A = element_tensors(compute_reference_tensor(forms["poisson"]), V)
    for k in range(len(V)):
        assert np.abs(M[k] - p1_mass(V[k])).max() <= 1e-13
        assert np.abs(A[k] - p1_stiffness(V[k])).max() <= 1e-12 * max(1, np.abs(A[k]).max())


@pytest.mark.parametrize("cell", ["triangle", "tetrahedron"])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_scalar_cases_against_physical_oracle(cell, q):
    rng = np.random.default_rng(q)
    V = random_simplices(CELL_DIM[cell], 5, rng)
    forms = scalar_forms(cell, q)
    nodes = lagrange_nodes(cell, q).points
    M = element_tensors(compute_reference_tensor(forms["mass"]), V)
    A = element_tensors(compute_reference_tensor(forms["poisson"]), V)
    for k in range(len(V)):
        m, s = oracle_scalar_forms(V[k], nodes, q)
        assert np.abs(M[k] - m).max() <= 1e-11
        assert np.abs(A[k] - s).max() <= 1e-10


@pytest.mark.parametrize("cell", ["triangle", "tetrahedron"])
@pytest.mark.parametrize("q", [1, 2])
def test_vector_cases_against_physical_oracle(cell, q):
    rng = np.random.default_rng(7 + q)
    V = random_simplices(CELL_DIM[cell], 3, rng)
    forms = vector_forms(cell, q)
    nodes = lagrange_nodes(cell, q).points
    n0 = forms["convection"].arguments[0].space_dim
    w = rng.standard_normal((len(V), n0))
    C = element_tensors(compute_reference_tensor(forms["convection"]), V, [w])
    S = element_tensors(compute_reference_tensor(forms["strain"]), V)
    for k in range(len(V)):
        conv, strain = oracle_vector_forms(V[k], nodes, q, w[k])
        assert np.abs(C[k] - conv).max() <= 1e-10
        assert np.abs(S[k] - strain).max() <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), cell=st.sampled_from(["triangle", "tetrahedron"]), q=st.integers(1, 2))
def test_affine_and_quadrature_paths_agree(seed, cell, q):
    rng = np.random.default_rng(seed)
    V = random_simplices(CELL_DIM[cell], 4, rng)
    forms = {**scalar_forms(cell, q), **vector_forms(cell, q)}
    for form in forms.values():
        coefs = [rng.standard_normal((len(V), e.space_dim)) for e in form.coefficients]
        a = element_tensors(compute_reference_tensor(form), V, coefs)
        b = element_tensor_quadrature(form, V, coefs)
        assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(a).max())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_element_tensor_is_linear_in_coefficients(seed):
    rng = np.random.default_rng(seed)
    form = vector_forms("triangle", 1)["convection"]
    ref = compute_reference_tensor(form)
    V = random_simplices(2, 1, rng)
    w1, w2 = rng.standard_normal((2, 1, 6))
    s = rng.standard_normal()
    lhs = element_tensors(ref, V, [w1 + s * w2])
    rhs = element_tensors(ref, V, [w1]) + s * element_tensors(ref, V, [w2])
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(lhs).max())


def test_geometry_is_invariant_under_vertex_relabelling_up_to_permutation():
    rng = np.random.default_rng(5)
    V = random_simplices(3, 1, rng)[0]
    ref = compute_reference_tensor(scalar_forms("tetrahedron", 1)["poisson"])
    perm = [2, 0, 3, 1]
    A = element_tensors(ref, V[None])[0]
    B = element_tensors(ref, V[perm][None])[0]
    assert np.abs(B - A[np.ix_(perm, perm)]).max() <= 1e-12


def test_degenerate_cell():
    V = np.array([[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]])
    with pytest.raises(DegenerateCell):
        cell_geometry(V)


def test_secondary_ranks_of_test_cases():
    ranks = {name: [len(t.secondary) for t in compute_reference_tensor(f).terms] for name, f in
             {**scalar_forms("tetrahedron", 1), **vector_forms("tetrahedron", 1)}.items()}
    assert ranks["mass"] == [0]
    assert ranks["poisson"] == [2]
    assert ranks["convection"] == [3]
    assert sorted(ranks["strain"]) == [2, 4]


def test_flop_counts_poisson_p2():
    counts = flop_count(compute_reference_tensor(scalar_forms("triangle", 2)["poisson"]))
    assert counts["direct"] == 144
    assert counts["quadrature"] == 288  # 4 points * 36 entries * 2 directions
    assert counts["quadrature_tensor"] == 576


def test_snap_rationals():
    assert snap_rationals(np.array([0.5, 1 / 3]))[1] == Fraction(1, 3)
    assert snap_rationals(np.array([np.pi])) is None


def test_latex_table():
    tex = to_latex(compute_reference_tensor(scalar_forms("triangle", 2)["poisson"]))
    assert "\\begin{tabular}" in tex
    assert "$" in tex
