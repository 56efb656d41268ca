from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorform.errors import FormError, FormSyntaxError, NotLowerable
from tensorform.forms.dsl import (
    D,
    BasisFunction,
    FiniteElement,
    Function,
    Identity,
    Index,
    VectorElement,
    div,
    dot,
    dx,
    grad,
    mult,
    trace,
    transp,
)
from tensorform.forms.formfile import load_form_file, parse_form_file
from tensorform.forms.lowering import Bound, CanonicalForm, Primary, lower, signature, to_source

LIBRARY = Path(__file__).resolve().parents[1] / "src" / "tensorform" / "forms" / "library"

POISSON = """
element = FiniteElement("Lagrange", "tetrahedron", 1)
v = BasisFunction(element)
U = BasisFunction(element)
a = dot(grad(v), grad(U))*dx
"""


def test_shapes_of_compound_operators():
    s = FiniteElement("Lagrange", "triangle", 1)
    vec = VectorElement("Lagrange", "triangle", 1)
    u, w = BasisFunction(s), BasisFunction(vec)
    assert grad(u).shape == (2,)
    assert grad(w).shape == (2, 2)
    assert div(w).shape == ()
    assert transp(grad(w)).shape == (2, 2)
    assert trace(grad(w)).shape == ()
    assert mult(grad(w), w).shape == (2,)
    assert dot(grad(w), grad(w)).shape == ()
    assert Identity(2).shape == (2, 2)
    assert len(w) == 2


def test_summation_convention_errors():
    vec = VectorElement("Lagrange", "triangle", 1)
    v, U = BasisFunction(vec), BasisFunction(vec)
    i, j = Index(), Index()
    with pytest.raises(FormError, match="index appears once"):
        v[i] * U[j] * dx
    with pytest.raises(FormError, match="appears 3 times"):
        v[i] * U[i] * D(U[i], 0) * dx


def test_shape_errors():
    s, vec = FiniteElement("Lagrange", "triangle", 1), VectorElement("Lagrange", "triangle", 1)
    with pytest.raises(FormError, match="incompatible value shapes"):
        BasisFunction(s) + BasisFunction(vec)
    with pytest.raises(FormError, match="scalar valued"):
        grad(BasisFunction(s)) * dx
    with pytest.raises(FormError, match="out of range"):
        BasisFunction(vec)[2]


def test_not_lowerable():
    s = FiniteElement("Lagrange", "triangle", 1)
    v, U, f = BasisFunction(s), BasisFunction(s), Function(s)
    with pytest.raises(NotLowerable):
        lower(v * U / f * dx)
    with pytest.raises(NotLowerable):
        lower(abs(f) * v * U * dx)
    with pytest.raises(NotLowerable, match="multilinear"):
        lower((v * U + v) * dx)


def test_poisson_lowers_to_one_monomial_with_shared_index():
    form = lower(parse_form_file(POISSON)[0])
    assert form.arity == 2
    (m,) = form.monomials
    assert m.coefficient == 1.0
    assert m.ranges == (3,)
    assert [f.derivatives for f in m.factors] == [(Bound(0),), (Bound(0),)]
    assert [f.basis for f in m.factors] == [Primary(0), Primary(1)]


def test_strain_groups_into_two_terms():
    a, _ = load_form_file(LIBRARY / "strain.form")
    form = lower(a)
    assert len(form.monomials) == 4
    grouped = form.grouped()
    assert len(grouped.monomials) == 2
    assert sorted(m.coefficient for m in grouped.monomials) == pytest.approx([0.5, 0.5])


def test_elasticity_coefficients():
    a, L = load_form_file(LIBRARY / "elasticity.form")
    form = lower(a).grouped()
    E, nu = 10.0, 0.3
    mu = E / (2 * (1 + nu))
    lmbda = E * nu / ((1 + nu) * (1 - 2 * nu))
    assert sorted(m.coefficient for m in form.monomials) == pytest.approx(sorted([mu, mu, lmbda]))
    assert lower(L).arity == 1


def test_stabilization_ranges():
    a, _ = load_form_file(LIBRARY / "stabilization.form")
    (m,) = lower(a).monomials
    assert sorted(m.ranges) == [3, 3, 3, 12, 12]


@pytest.mark.parametrize("name", sorted(p.name for p in LIBRARY.glob("*.form")))
def test_library_round_trips_through_source(name):
    a, L = load_form_file(LIBRARY / name)
    for form in (a, L):
        if form is None:
            continue
        canonical = lower(form)
        again = lower(parse_form_file(to_source(canonical))[0])
        assert again.signature == canonical.signature
        assert CanonicalForm.decode(canonical.encode()).signature == canonical.signature


def test_signature_ignores_names_whitespace_and_comments():
    base = signature(lower(parse_form_file(POISSON)[0]))
    edited = POISSON.replace("v", "phi").replace("U", "psi").replace("\n", "\n# note\n\n")
    assert signature(lower(parse_form_file(edited)[0])) == base
    degree2 = POISSON.replace('"tetrahedron", 1', '"tetrahedron", 2')
    assert signature(lower(parse_form_file(degree2)[0])) != base


@settings(max_examples=40, deadline=None)
@given(
    perm=st.permutations(["v[i]", "w[j]", "D(U[i], j)"]),
    c=st.sampled_from([1.0, 2.0, 0.5, -3.0]),
)
def test_signature_invariant_under_factor_order_and_index_names(perm, c):
    """Reordering commuting factors or renaming summation indices leaves the signature unchanged."""
    head = 'e = VectorElement("Lagrange", "triangle", 1)\nv = BasisFunction(e)\nU = BasisFunction(e)\nw = Function(e)\n'
    ref = lower(parse_form_file(head + f"a = {c!r}*v[i]*w[j]*D(U[i], j)*dx\n")[0])
    body = "*".join(perm).replace("i", "p").replace("j", "q")
    other = lower(parse_form_file(head + f"a = {c!r}*{body}*dx\n")[0])
    assert other.signature == ref.signature


def test_parse_errors_carry_location():
    with pytest.raises(FormSyntaxError) as exc:
        parse_form_file("a = v*\n")
    assert exc.value.line == 1
    with pytest.raises(FormSyntaxError, match="undeclared identifier 'zz'") as exc:
        parse_form_file('e = FiniteElement("Lagrange", "triangle", 1)\nv = BasisFunction(e)\na = v*zz*dx\n')
    assert exc.value.line == 3
    with pytest.raises(FormSyntaxError, match="unsupported statement"):
        parse_form_file("import os\n")


def test_parse_requires_a_form():
    with pytest.raises(FormError, match="no form defined"):
        parse_form_file("x = 1\n")
    with pytest.raises(FormError, match="dx"):
        parse_form_file('e = FiniteElement("Lagrange", "triangle", 1)\nv = BasisFunction(e)\nL = v\n')


def test_macro_rules():
    with pytest.raises(FormSyntaxError, match="single return"):
        parse_form_file("def f(x):\n    y = x\n    return y\n")
    src = POISSON.replace("a = dot", "def g(u):\n    return grad(u)\n\na = dot").replace("grad(v), grad(U)", "g(v), g(U)")
    assert lower(parse_form_file(src)[0]).signature == lower(parse_form_file(POISSON)[0]).signature
