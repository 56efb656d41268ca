"""Independent oracles and frozen reference values for the test suite.

Nothing here calls the package's reference-tensor, optimizer or assembly
code.  The physical-space element oracle builds its own monomial Lagrange
basis directly on the physical cell; the only package piece it borrows is the
node *ordering* (``lagrange_nodes``) so that local numbering matches.
"""
from fractions import Fraction
from itertools import product
from math import factorial

import numpy as np

# 6 * A0 for Poisson with P2 Lagrange on the reference triangle.
# Entry [i1][i2] holds (alpha1, alpha2) flattened as (00, 01, 10, 11).
POISSON_P2_TABLE = [
    [(3, 3, 3, 3), (1, 0, 1, 0), (0, 1, 0, 1), (0, 0, 0, 0), (0, -4, 0, -4), (-4, 0, -4, 0)],
    [(1, 1, 0, 0), (3, 0, 0, 0), (0, -1, 0, 0), (0, 4, 0, 0), (0, 0, 0, 0), (-4, -4, 0, 0)],
    [(0, 0, 1, 1), (0, 0, -1, 0), (0, 0, 0, 3), (0, 0, 4, 0), (0, 0, -4, -4), (0, 0, 0, 0)],
    [(0, 0, 0, 0), (0, 0, 4, 0), (0, 4, 0, 0), (8, 4, 4, 8), (-8, -4, -4, 0), (0, -4, -4, -8)],
    [(0, 0, -4, -4), (0, 0, 0, 0), (0, -4, 0, -4), (-8, -4, -4, 0), (8, 4, 4, 8), (0, 4, 4, 0)],
    [(-4, -4, 0, 0), (-4, 0, -4, 0), (0, 0, 0, 0), (0, -4, -4, -8), (0, 4, 4, 0), (8, 4, 4, 8)],
]

# Upper triangle of the same table after folding the symmetric geometry
# tensor: components (G00, G01 + G10, G11).
POISSON_P2_SYMMETRIC = {
    (0, 0): (3, 6, 3), (0, 1): (1, 1, 0), (0, 2): (0, 1, 1), (0, 3): (0, 0, 0), (0, 4): (0, -4, -4),
    (0, 5): (-4, -4, 0), (1, 1): (3, 0, 0), (1, 2): (0, -1, 0), (1, 3): (0, 4, 0), (1, 4): (0, 0, 0),
    (1, 5): (-4, -4, 0), (2, 2): (0, 0, 3), (2, 3): (0, 4, 0), (2, 4): (0, -4, -4), (2, 5): (0, 0, 0),
    (3, 3): (8, 8, 8), (3, 4): (-8, -8, 0), (3, 5): (0, -8, -8), (4, 4): (8, 8, 8), (4, 5): (0, 8, 0),
    (5, 5): (8, 8, 8),
}

EDGE_REORDERING_P5 = ((0, 1, 2, 3), (3, 2, 1, 0))
FACE_REORDERING_P5 = (
    (0, 1, 2, 3, 4, 5),
    (0, 3, 5, 1, 4, 2),
    (5, 3, 0, 4, 1, 2),
    (2, 1, 0, 4, 3, 5),
    (2, 4, 5, 1, 3, 0),
    (5, 4, 2, 3, 1, 0),
)


def simplex_monomial_integral(exponents):
    """Closed form of the integral of prod X_i^a_i over the reference simplex."""
    num = 1
    for a in exponents:
        num *= factorial(a)
    return Fraction(num, factorial(len(exponents) + sum(exponents)))


def reference_simplex(d):
    return np.vstack([np.zeros(d), np.eye(d)])


def random_simplices(d, n, rng, min_det=0.05):
    out = []
    base = reference_simplex(d)
    while len(out) < n:
        V = base + 0.3 * rng.standard_normal(base.shape)
        if abs(np.linalg.det((V[1:] - V[0]).T)) > min_det:
            out.append(V)
    return np.array(out)


# ---------------------------------------------------------------------------
# P1 closed forms


def p1_gradients(V):
    """Gradients of the barycentric coordinates of simplex V (d+1, d)."""
    d = V.shape[1]
    M = np.hstack([np.ones((d + 1, 1)), V])  # rows: (1, x_k)
    C = np.linalg.inv(M)  # lambda_i(x) = C[0,i] + C[1:,i] . x
    return C[1:, :].T


def p1_volume(V):
    d = V.shape[1]
    return abs(np.linalg.det((V[1:] - V[0]).T)) / factorial(d)


def p1_stiffness(V):
    G = p1_gradients(V)
    return p1_volume(V) * G @ G.T


def p1_mass(V):
    d = V.shape[1]
    return p1_volume(V) / ((d + 1) * (d + 2)) * (np.ones((d + 1, d + 1)) + np.eye(d + 1))


# ---------------------------------------------------------------------------
# physical-space monomial Lagrange oracle


def _exponents(d, q):
    return [e for e in product(range(q + 1), repeat=d) if sum(e) <= q]


def _collapsed_rule(d, m):
    """Gauss-Legendre product rule mapped to the reference simplex by the Duffy transform."""
    x, w = np.polynomial.legendre.leggauss(m)
    x, w = (x + 1) / 2, w / 2
    pts, wts = [], []
    for idx in product(range(m), repeat=d):
        t = [x[k] for k in idx]
        wt = np.prod([w[k] for k in idx])
        # X_1 = t1, X_2 = (1 - t1) t2, X_3 = (1 - t1)(1 - t2) t3
        p, scale, rem = [], 1.0, 1.0
        for j in range(d):
            p.append(rem * t[j])
            if j < d - 1:
                scale *= rem
                rem *= 1 - t[j]
        jac = np.prod([(1 - t[j]) ** (d - 1 - j) for j in range(d - 1)])
        pts.append(p)
        wts.append(wt * jac)
    return np.array(pts), np.array(wts)


class MonomialLagrange:
    """Lagrange basis on a physical simplex from monomials in physical coordinates."""

    def __init__(self, V, ref_nodes, q):
        self.V = np.asarray(V, dtype=float)
        d = self.V.shape[1]
        self.d, self.q = d, q
        self.exps = _exponents(d, q)
        J = (self.V[1:] - self.V[0]).T
        self.J = J
        self.nodes = self.V[0] + np.asarray(ref_nodes) @ J.T
        self.center = self.V.mean(axis=0)
        M = self._monomials(self.nodes)
        self.coef = np.linalg.solve(M, np.eye(len(self.exps)))  # columns are basis functions

    def _monomials(self, x):
        y = np.atleast_2d(x) - self.center
        return np.stack([np.prod(y ** np.array(e), axis=1) for e in self.exps], axis=1)

    def _monomial_grads(self, x):
        y = np.atleast_2d(x) - self.center
        out = np.zeros((len(y), len(self.exps), self.d))
        for k, e in enumerate(self.exps):
            for a in range(self.d):
                if e[a] == 0:
                    continue
                ea = list(e)
                ea[a] -= 1
                out[:, k, a] = e[a] * np.prod(y ** np.array(ea), axis=1)
        return out

    def values(self, x):
        return self._monomials(x) @ self.coef  # (npts, n)

    def grads(self, x):
        return np.einsum("pkd,kn->pnd", self._monomial_grads(x), self.coef)  # (npts, n, d)

    def rule(self, degree):
        X, w = _collapsed_rule(self.d, degree // 2 + 2)
        x = self.V[0] + X @ self.J.T
        return x, w * abs(np.linalg.det(self.J))


def oracle_scalar_forms(V, ref_nodes, q):
    """Mass and stiffness matrices for scalar Lagrange of degree q on simplex V."""
    B = MonomialLagrange(V, ref_nodes, q)
    x, w = B.rule(2 * q)
    phi, dphi = B.values(x), B.grads(x)
    mass = np.einsum("p,pi,pj->ij", w, phi, phi)
    stiff = np.einsum("p,pia,pja->ij", w, dphi, dphi)
    return mass, stiff


def oracle_vector_forms(V, ref_nodes, q, wvals):
    """Convection v[i] w[j] dU[i]/dx_j and strain eps(v):eps(U) for vector Lagrange.

    Vector local numbering is component-major: index c*n + k.  ``wvals``
    holds the local coefficients of w in the same numbering.
    """
    B = MonomialLagrange(V, ref_nodes, q)
    d, n = B.d, len(B.exps)
    x, wts = B.rule(3 * q)
    phi, dphi = B.values(x), B.grads(x)
    N = d * n
    val = np.zeros((len(x), N, d))
    grad = np.zeros((len(x), N, d, d))  # [p, basis, component, direction]
    for c in range(d):
        val[:, c * n:(c + 1) * n, c] = phi
        grad[:, c * n:(c + 1) * n, c, :] = dphi
    wq = np.einsum("k,pkc->pc", wvals, val)
    conv = np.einsum("p,pic,pj,pkcj->ik", wts, val, wq, grad)
    eps = 0.5 * (grad + np.swapaxes(grad, 2, 3))
    strain = np.einsum("p,piab,pkab->ik", wts, eps, eps)
    return conv, strain


# ---------------------------------------------------------------------------
# minimum spanning tree by Prim on a dense weight matrix


def prim_mst_weight(W):
    n = len(W)
    if n == 0:
        return 0
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best[0] = 0
    total = 0
    for _ in range(n):
        k = int(np.argmin(np.where(in_tree, np.inf, best)))
        total += best[k]
        in_tree[k] = True
        best = np.minimum(best, np.where(in_tree, np.inf, W[k]))
    return total
