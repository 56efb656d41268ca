from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import POISSON_P2_SYMMETRIC, prim_mst_weight
from tensorform.errors import ScheduleVerificationFailed, SymmetryAssertionFailed
from tensorform.forms.dsl import D, BasisFunction, FiniteElement, Function, Index, VectorElement, dot, dx, grad
from tensorform.forms.lowering import lower
from tensorform.optimize import (
    Relation,
    emit_schedule,
    flatten_and_reduce,
    minimum_spanning_tree,
    optimize,
    random_geometry,
    relation,
    relation_weights,
    schedule_from_json,
    verify_schedule,
)
from tensorform.tensorrep import compute_reference_tensor


@pytest.fixture(scope="module")
def poisson_p2():
    e = FiniteElement("Lagrange", "triangle", 2)
    v, U = BasisFunction(e), BasisFunction(e)
    return compute_reference_tensor(lower(dot(grad(v), grad(U)) * dx))


def apply(rel, u):
    """Derive the target vector from ``u`` exactly as a schedule would."""
    u = [Fraction(x) for x in u]
    if rel.kind == "equal":
        return u
    if rel.kind == "negate":
        return [-x for x in u]
    if rel.kind == "scale":
        return [rel.alpha * x for x in u]
    out = [rel.sign * x for x in u]
    for k, dl in zip(rel.positions, rel.deltas):
        out[k] += dl
    return out


def test_symmetric_reduction_matches_table(poisson_p2):
    vecs = flatten_and_reduce(poisson_p2, symmetric_output=True, symmetric_geometry=True)
    assert len(vecs) == 21
    assert vecs.length == 3
    assert vecs.direct_count() == 63
    got = {tuple(i): tuple(6 * x for x in row) for i, row in zip(vecs.indices, vecs.exact)}
    assert got == {k: tuple(Fraction(x) for x in v) for k, v in POISSON_P2_SYMMETRIC.items()}


def test_spanning_tree_weight_and_certificate(poisson_p2):
    vecs = flatten_and_reduce(poisson_p2, True, True)
    tree = minimum_spanning_tree(vecs)
    assert tree.tree_weight == prim_mst_weight(relation_weights(vecs).astype(float))
    assert tree.tree_weight <= 14
    sched = emit_schedule(vecs, tree)
    assert sched.map_count <= 17
    assert sched.discounted_map_count <= sched.map_count
    report = verify_schedule(sched, poisson_p2, trials=100)
    assert report["max_deviation"] <= 1e-12


def test_documented_relations():
    h = relation((8, 8, 8), (-8, -8, 0))
    assert (h.kind, h.weight, h.sign, h.positions) == ("hamming", 1, -1, (2,))
    s = relation((1, 1, 0), (-8, -8, 0))
    assert (s.kind, s.weight, s.alpha) == ("scale", 1, -8)
    assert relation((1, 2, 3), (1, 2, 3)).kind == "equal"
    assert relation((1, 2, 3), (-1, -2, -3)).kind == "negate"


vec3 = st.lists(st.integers(-9, 9), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(u=vec3, v=vec3)
def test_relation_reconstructs_target(u, v):
    rel = relation([Fraction(x) for x in u], [Fraction(x) for x in v])
    assert apply(rel, u) == [Fraction(x) for x in v]
    hamming = sum(a != b for a, b in zip(u, v))
    assert rel.weight <= hamming
    assert rel.weight == 0 or (rel.kind in ("scale", "hamming"))


@settings(max_examples=100, deadline=None)
@given(u=vec3, v=vec3)
def test_relation_weight_is_symmetric(u, v):
    f = lambda x: [Fraction(a) for a in x]
    assert relation(f(u), f(v)).weight == relation(f(v), f(u)).weight


@settings(max_examples=30, deadline=None)
@given(rows=st.lists(vec3, min_size=2, max_size=12))
def test_mst_matches_prim_oracle(rows):
    from tensorform.optimize import ContractionVectors

    n = len(rows)
    exact = np.array([[Fraction(x) for x in r] for r in rows], dtype=object)
    vecs = ContractionVectors(
        indices=[(k,) for k in range(n)],
        vectors=exact.astype(float),
        exact=exact,
        groups=[(k,) for k in range(3)],
        writeback=np.arange(n),
        primary_dims=(n,),
        full_length=3,
    )
    W = relation_weights(vecs)
    tree = minimum_spanning_tree(vecs, W)
    assert tree.tree_weight == prim_mst_weight(W.astype(float))
    sched = emit_schedule(vecs, tree)
    g = np.random.default_rng(0).standard_normal((5, 3))
    assert np.abs(sched.evaluate(g) - g @ exact.astype(float).T).max() <= 1e-12


def test_schedule_round_trips_through_json(poisson_p2):
    sched = optimize(poisson_p2, True, True)
    again = schedule_from_json(sched.vectors, sched.to_json())
    g = random_geometry(poisson_p2, 10, np.random.default_rng(2))
    assert np.array_equal(again.evaluate(g), sched.evaluate(g))
    assert again.map_count == sched.map_count


def test_exact_evaluation(poisson_p2):
    sched = optimize(poisson_p2, True, True)
    g = np.array([[Fraction(1), Fraction(2), Fraction(2), Fraction(5)]], dtype=object)
    direct = poisson_p2.flattened()(g, exact=True)
    assert np.all(sched.evaluate(g, exact=True) == direct)


def test_symmetry_assertion_failures():
    e = VectorElement("Lagrange", "triangle", 1)
    v, U, w = BasisFunction(e), BasisFunction(e), Function(e)
    i, j = Index(), Index()
    ref = compute_reference_tensor(lower(v[i] * w[j] * D(U[i], j) * dx))
    with pytest.raises(SymmetryAssertionFailed):
        flatten_and_reduce(ref, symmetric_output=True)
    with pytest.raises(SymmetryAssertionFailed):
        flatten_and_reduce(ref, symmetric_geometry=True)


def test_tampered_schedule_is_rejected(poisson_p2):
    sched = optimize(poisson_p2, True, True)
    k = next(n for n, op in enumerate(sched.operations) if op.relation.kind == "hamming")
    op = sched.operations[k]
    bad = replace(op, relation=replace(op.relation, deltas=tuple(d + 1 for d in op.relation.deltas)))
    ops = list(sched.operations)
    ops[k] = bad
    broken = replace(sched, operations=ops)
    with pytest.raises(ScheduleVerificationFailed):
        verify_schedule(broken, poisson_p2)


def test_relation_json_round_trip():
    rel = relation([Fraction(1), Fraction(1, 3), Fraction(0)], [Fraction(-1), Fraction(0), Fraction(0)])
    assert Relation.from_json(rel.to_json()) == rel
