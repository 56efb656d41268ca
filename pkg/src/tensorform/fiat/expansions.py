"""Orthonormal (Dubiner) prime bases on reference simplices.

Values and first derivatives are evaluated together by running the three-term
recurrences on (value, gradient) pairs.  The recurrences are written for the
biunit simplex with vertices at -1/+1 and the result is rescaled so that the
basis is orthonormal on the unit reference cell.
"""
from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from ..errors import DegreeUnsupported
from .reference import reference_cell

MAX_DEGREE = 8


def _jrc(a, b, n):
    """Coefficients of the Jacobi three-term recurrence P_{n+1} = (an x + bn) P_n - cn P_{n-1}."""
    an = (2 * n + 1 + a + b) * (2 * n + 2 + a + b) / (2 * (n + 1) * (n + 1 + a + b))
    bn = (a * a - b * b) * (2 * n + 1 + a + b) / (2 * (n + 1) * (2 * n + a + b) * (n + 1 + a + b))
    cn = (n + a) * (n + b) * (2 * n + 2 + a + b) / ((n + 1) * (n + 1 + a + b) * (2 * n + a + b))
    return an, bn, cn


class _Dual:
    """Polynomial value together with its gradient at a set of points."""

    __slots__ = ("v", "g")

    def __init__(self, v, g):
        self.v = v
        self.g = g

    def __add__(self, other):
        if isinstance(other, _Dual):
            return _Dual(self.v + other.v, self.g + other.g)
        return _Dual(self.v + other, self.g)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, _Dual):
            return _Dual(self.v - other.v, self.g - other.g)
        return _Dual(self.v - other, self.g)

    def __mul__(self, other):
        if isinstance(other, _Dual):
            return _Dual(self.v * other.v, self.g * other.v + self.v * other.g)
        return _Dual(self.v * other, self.g * other)

    __rmul__ = __mul__


def _coords(x):
    """Biunit coordinates as dual numbers (gradients are w.r.t. biunit coords)."""
    npts, dim = x.shape
    out = []
    for k in range(dim):
        g = np.zeros((dim, npts))
        g[k] = 1.0
        out.append(_Dual(x[:, k].copy(), g))
    return out


def _one(npts, dim):
    return _Dual(np.ones(npts), np.zeros((dim, npts)))


def _tabulate_line(n, X):
    (x,) = _coords(X)
    res = [_one(len(X), 1)]
    if n >= 1:
        res.append(x * 1.0)
    for p in range(1, n):
        a = (2 * p + 1) / (p + 1)
        b = p / (p + 1)
        res.append(x * res[p] * a - res[p - 1] * b)
    return [r * sqrt(p + 0.5) for p, r in enumerate(res)]


def _idx2(p, q):
    return (p + q) * (p + q + 1) // 2 + q


def _tabulate_triangle(n, X):
    x, y = _coords(X)
    npts = len(X)
    res = [None] * ((n + 1) * (n + 2) // 2)
    res[_idx2(0, 0)] = _one(npts, 2)
    f1 = (x * 2.0 + y + 1.0) * 0.5
    f2 = (y * -1.0 + 1.0) * 0.5
    f3 = f2 * f2
    for p in range(1, n + 1):
        a = (2.0 * p - 1.0) / p
        res[_idx2(p, 0)] = f1 * res[_idx2(p - 1, 0)] * a
        if p > 1:
            res[_idx2(p, 0)] = res[_idx2(p, 0)] - f3 * res[_idx2(p - 2, 0)] * ((p - 1.0) / p)
    for p in range(n):
        res[_idx2(p, 1)] = res[_idx2(p, 0)] * (y * (1.5 + p) + (0.5 + p))
        for q in range(1, n - p):
            a1, a2, a3 = _jrc(2 * p + 1, 0, q)
            res[_idx2(p, q + 1)] = res[_idx2(p, q)] * (y * a1 + a2) - res[_idx2(p, q - 1)] * a3
    for p in range(n + 1):
        for q in range(n - p + 1):
            res[_idx2(p, q)] = res[_idx2(p, q)] * sqrt((p + 0.5) * (p + q + 1.0))
    return res


def _idx3(p, q, r):
    s = p + q + r
    return s * (s + 1) * (s + 2) // 6 + (q + r) * (q + r + 1) // 2 + r


def _tabulate_tetrahedron(n, X):
    x, y, z = _coords(X)
    npts = len(X)
    res = [None] * ((n + 1) * (n + 2) * (n + 3) // 6)
    res[_idx3(0, 0, 0)] = _one(npts, 3)
    f1 = (x * 2.0 + y + z + 2.0) * 0.5
    f2 = ((y + z) * 0.5) * ((y + z) * 0.5)
    f3 = (y * 2.0 + z + 1.0) * 0.5
    f4 = (z * -1.0 + 1.0) * 0.5
    f5 = f4 * f4
    for p in range(1, n + 1):
        a1 = (2.0 * p - 1.0) / p
        a2 = (p - 1.0) / p
        res[_idx3(p, 0, 0)] = f1 * res[_idx3(p - 1, 0, 0)] * a1
        if p > 1:
            res[_idx3(p, 0, 0)] = res[_idx3(p, 0, 0)] - f2 * res[_idx3(p - 2, 0, 0)] * a2
    for p in range(n):
        res[_idx3(p, 1, 0)] = res[_idx3(p, 0, 0)] * ((y + 1.0) * p + (z + y * 3.0 + 2.0) * 0.5)
        for q in range(1, n - p):
            aq, bq, cq = _jrc(2 * p + 1, 0, q)
            res[_idx3(p, q + 1, 0)] = (
                res[_idx3(p, q, 0)] * (f3 * aq + f4 * bq) - res[_idx3(p, q - 1, 0)] * (f5 * cq)
            )
    for p in range(n):
        for q in range(n - p):
            res[_idx3(p, q, 1)] = res[_idx3(p, q, 0)] * (z * (2.0 + p + q) + (1.0 + p + q))
    for p in range(n - 1):
        for q in range(n - p - 1):
            for r in range(1, n - p - q):
                ar, br, cr = _jrc(2 * p + 2 * q + 2, 0, r)
                res[_idx3(p, q, r + 1)] = (
                    res[_idx3(p, q, r)] * (z * ar + br) - res[_idx3(p, q, r - 1)] * cr
                )
    for p in range(n + 1):
        for q in range(n - p + 1):
            for r in range(n - p - q + 1):
                res[_idx3(p, q, r)] = res[_idx3(p, q, r)] * sqrt(
                    (p + 0.5) * (p + q + 1.0) * (p + q + r + 1.5)
                )
    return res


_TABULATORS = {1: _tabulate_line, 2: _tabulate_triangle, 3: _tabulate_tetrahedron}


@dataclass(frozen=True, eq=False)
class PrimeBasis:
    """Orthonormal basis of P_q on a reference simplex.

    ``tabulate(points)`` returns values with shape (n, npts); with
    ``derivatives=True`` it also returns gradients with shape (n, npts, d).
    """

    cell: object
    degree: int

    @property
    def dim(self):
        return comb(self.degree + self.cell.dim, self.cell.dim)

    def tabulate(self, points, derivatives=False):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.cell.dim
        if X.shape[1] != d:
            raise ValueError(f"expected points of dimension {d}, got {X.shape[1]}")
        duals = _TABULATORS[d](self.degree, 2.0 * X - 1.0)
        # biunit -> unit rescaling of the normalisation and of the chain rule
        scale = sqrt(2.0**d)
        values = np.array([u.v for u in duals]) * scale
        if not derivatives:
            return values
        grads = np.array([u.g for u in duals]).transpose(0, 2, 1) * (2.0 * scale)
        return values, grads


def build_prime_basis(cell, degree):
    cell = reference_cell(cell)
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree > MAX_DEGREE:
        raise DegreeUnsupported(f"degree unsupported: {degree} > {MAX_DEGREE}")
    return PrimeBasis(cell, degree)
