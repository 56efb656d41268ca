"""End-to-end problems: manufactured Poisson solutions and static linear elasticity."""
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .artifact import compile_form
from .assembly import CoefficientFunction, apply_dirichlet, assemble, boundary_dofs, interpolate
from .dofmap import generate_dofmap
from .fiat.quadrature import make_quadrature
from .forms.dsl import BasisFunction, FiniteElement, Function, Identity, VectorElement, dot, dx, grad, mult, trace, transp
from .mesh import unit_cube, unit_square
from .solvers import solve_cg
from .tensorrep import basis_for, cell_geometry


def poisson_forms(cell, degree):
    element = FiniteElement("Lagrange", cell, degree)
    v, U, f = BasisFunction(element), BasisFunction(element), Function(element)
    return dot(grad(v), grad(U)) * dx, v * f * dx


def elasticity_forms(cell, degree, E=10.0, nu=0.3):
    element = VectorElement("Lagrange", cell, degree)
    v, U, f = BasisFunction(element), BasisFunction(element), Function(element)
    mu = E / (2 * (1 + nu))
    lmbda = E * nu / ((1 + nu) * (1 - 2 * nu))

    def epsilon(u):
        return 0.5 * (grad(u) + transp(grad(u)))

    def sigma(u):
        return 2 * mu * epsilon(u) + lmbda * mult(trace(epsilon(u)), Identity(len(u)))

    return dot(grad(v), sigma(U)) * dx, dot(v, f) * dx


def l2_error(u, exact, mesh, degree=None):
    """||u_h - exact|| in L2, with a quadrature rule of degree 2q + 2 on every cell."""
    element = u.dofmap.spec.element
    q = 2 * element.degree + 2 if degree is None else degree
    rule = make_quadrature(element.cell, q)
    table = basis_for(element).tabulate(rule.points)  # (n0, nq) scalar elements only
    uh = u.restrict() @ table  # (nc, nq)
    geom = cell_geometry(mesh.cell_vertices())
    x = geom.vertices[:, :1, :] + np.einsum("qd,ced->cqe", rule.points, geom.J)
    err = (uh - exact(x.reshape(-1, mesh.dim)).reshape(uh.shape)) ** 2
    return float(np.sqrt(np.sum(err @ rule.weights * np.abs(geom.det))))


def _manufactured(dim):
    def u(x):
        return np.prod(np.sin(pi * x), axis=-1)

    def f(x):
        return dim * pi**2 * u(x)

    return u, f


@dataclass
class PoissonResult:
    n: int
    h: float
    dofs: int
    l2_error: float
    iterations: int
    solution: np.ndarray = field(repr=False)


def solve_poisson(dim, n, degree, rtol=1e-10, mode="tensor", compiled=None):
    """Solve -Laplace(u) = f with u = prod sin(pi x) on the unit square or cube."""
    mesh = unit_square(n) if dim == 2 else unit_cube(n)
    cell = mesh.cell_type.shape
    if compiled is None:
        a, L = poisson_forms(cell, degree)
        compiled = (compile_form(a, optimize=(mode == "schedule")), compile_form(L))
    ca, cL = compiled
    V = generate_dofmap(ca.form.arguments[0], mesh)
    exact, source = _manufactured(dim)
    f = interpolate(source, V, mesh)
    A = assemble(ca, mesh, [V, V], mode=mode)
    b = assemble(cL, mesh, [V], [f], mode="tensor")
    A, b = apply_dirichlet(A, b, boundary_dofs(V, mesh), 0.0)
    x, info = solve_cg(A, b, rtol=rtol)
    u = CoefficientFunction(V, x)
    return PoissonResult(n, 1.0 / n, V.size, l2_error(u, exact, mesh), info["iterations"], x)


def convergence_rates(results):
    """Observed orders log(e_k/e_{k+1}) / log(h_k/h_{k+1})."""
    return [
        float(np.log(r0.l2_error / r1.l2_error) / np.log(r0.h / r1.h)) for r0, r1 in zip(results, results[1:])
    ]


def poisson_study(dim=2, degree=1, sizes=(4, 8, 16, 32), rtol=1e-10, mode="tensor"):
    a, L = poisson_forms("triangle" if dim == 2 else "tetrahedron", degree)
    compiled = (compile_form(a, optimize=(mode == "schedule")), compile_form(L))
    results = [solve_poisson(dim, n, degree, rtol, mode, compiled) for n in sizes]
    return results, convergence_rates(results)


def solve_elasticity(n=4, degree=1, length=4.0, rtol=1e-10, E=10.0, nu=0.3, load=(0.0, 0.0, -1.0)):
    """Beam [0, length] x [0,1]^2 clamped at both ends under a uniform body force."""
    mesh = unit_cube(int(length * n), n, n, lengths=(length, 1.0, 1.0))
    a, L = elasticity_forms("tetrahedron", degree, E, nu)
    ca, cL = compile_form(a), compile_form(L)
    V = generate_dofmap(ca.form.arguments[0], mesh)
    A = assemble(ca, mesh, [V, V])
    f = interpolate(lambda x: np.broadcast_to(np.asarray(load), x.shape), V, mesh)
    b = assemble(cL, mesh, [V], [f])
    asym = float(abs(A - A.T).max())
    translations = [float(np.abs(A @ (np.arange(V.size) % 3 == c).astype(float)).max()) for c in range(3)]
    ends = boundary_dofs(V, mesh, lambda x: x[0] < 1e-12 or x[0] > length - 1e-12)
    A, b = apply_dirichlet(A, b, ends, 0.0)
    x, info = solve_cg(A, b, rtol=rtol, max_iter=20 * V.size)
    return {
        "cells": mesh.num_cells,
        "dofs": V.size,
        "asymmetry": asym,
        "translation_residual": max(translations),
        "iterations": info["iterations"],
        "max_displacement": float(np.abs(x).max()),
        "solution": x,
    }
