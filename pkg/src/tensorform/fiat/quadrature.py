"""Collapsed-coordinate Gauss-Jacobi quadrature on reference simplices."""
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

from ..errors import DegreeUnsupported
from .reference import reference_cell

MAX_DEGREE = 40


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    cell: object
    points: np.ndarray  # (npts, d)
    weights: np.ndarray  # (npts,)
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.dot(values, self.weights)


def _gauss_jacobi01(m, alpha):
    """m-point rule on [0, 1] for the weight (1 - t)**alpha."""
    x, w = roots_jacobi(m, alpha, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


def monomial_integral(exponents):
    """Exact integral of X^a over the reference simplex of matching dimension."""
    num = 1
    for a in exponents:
        num *= factorial(a)
    return num / factorial(sum(exponents) + len(exponents))


def _monomial_exponents(dim, degree):
    for a in product(range(degree + 1), repeat=dim):
        if sum(a) <= degree:
            yield a


def _check_exactness(points, weights, degree):
    dim = points.shape[1]
    powers = [np.vander(points[:, k], degree + 1, increasing=True) for k in range(dim)]
    for a in _monomial_exponents(dim, degree):
        vals = np.ones(len(weights))
        for k, ak in enumerate(a):
            vals = vals * powers[k][:, ak]
        exact = monomial_integral(a)
        err = abs(vals @ weights - exact)
        if err > 1e-13 + 1e-10 * exact:
            raise AssertionError(f"quadrature not exact for monomial {a}: error {err:.3e}")


@lru_cache(maxsize=None)
def make_quadrature(cell, degree):
    """Return a rule on ``cell`` integrating polynomials of ``degree`` exactly.

    The rule is a tensor product of Gauss-Jacobi rules pulled back through
    the Duffy (collapsed) map.  Exactness is checked against closed-form
    monomial integrals before the rule is returned.
    """
    cell = reference_cell(cell)
    if degree < 0:
        raise ValueError("exactness degree must be nonnegative")
    if degree > MAX_DEGREE:
        raise DegreeUnsupported(f"degree unsupported: quadrature degree {degree} > {MAX_DEGREE}")
    m = degree // 2 + 1
    dim = cell.dim
    s, ws = _gauss_jacobi01(m, 0.0)
    if dim == 1:
        pts = s[:, None]
        wts = ws
    elif dim == 2:
        t, wt = _gauss_jacobi01(m, 1.0)
        S, T = np.meshgrid(s, t, indexing="ij")
        pts = np.stack([S * (1 - T), T], axis=-1).reshape(-1, 2)
        wts = np.outer(ws, wt).ravel()
    else:
        t, wt = _gauss_jacobi01(m, 1.0)
        u, wu = _gauss_jacobi01(m, 2.0)
        S, T, U = np.meshgrid(s, t, u, indexing="ij")
        pts = np.stack([S * (1 - T) * (1 - U), T * (1 - U), U], axis=-1).reshape(-1, 3)
        wts = np.einsum("i,j,k->ijk", ws, wt, wu).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    _check_exactness(pts, wts, degree)
    return QuadratureRule(cell, pts, wts, degree)
