"""Nodal (Lagrange) elements expressed over an orthonormal prime basis.

Tabulation layout
-----------------
``tabulate(basis, points, order)`` returns a dense array indexed as

    (basis function, point)                         scalar, order 0
    (basis function, point, reference direction)    scalar, order 1
    (basis function, point, component)              vector, order 0
    (basis function, point, component, direction)   vector, order 1

Vector elements are built componentwise from the scalar element and numbered
component-major: local function ``c * n + k`` is scalar function ``k`` placed
in component ``c``.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from ..errors import (
    DegenerateNodeSet,
    DegreeUnsupported,
    DependentConstraints,
    UnsupportedDerivativeOrder,
)
from .expansions import MAX_DEGREE, PrimeBasis, build_prime_basis
from .quadrature import make_quadrature
from .reference import reference_cell

logger = logging.getLogger(__name__)

FAMILIES = ("Lagrange", "Discontinuous Lagrange", "Vector Lagrange")

_FAMILY_ALIASES = {
    "lagrange": "Lagrange",
    "cg": "Lagrange",
    "p": "Lagrange",
    "discontinuous lagrange": "Discontinuous Lagrange",
    "discontinuouslagrange": "Discontinuous Lagrange",
    "dg": "Discontinuous Lagrange",
    "vector lagrange": "Vector Lagrange",
    "vectorlagrange": "Vector Lagrange",
}


def canonical_family(name):
    try:
        return _FAMILY_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown element family: {name!r}") from None


@dataclass(frozen=True)
class NodeSet:
    """Point-evaluation functionals grouped by the entity that owns them.

    ``entity_dofs[dim][entity]`` is the tuple of local node numbers attached to
    that entity, in the lattice order used on the entity.
    """

    points: np.ndarray
    components: tuple
    entity_dofs: dict

    def __len__(self):
        return len(self.points)

    def grouping(self):
        """Per node: (topological dim, local entity, position within entity)."""
        out = [None] * len(self)
        for dim, ents in self.entity_dofs.items():
            for e, dofs in enumerate(ents):
                for pos, n in enumerate(dofs):
                    out[n] = (dim, e, pos)
        return out


def entity_lattice(vertices, degree):
    """Interior points of the equispaced lattice of ``degree`` on a simplex.

    Points are ordered with the barycentric weight of the last vertex varying
    slowest, i.e. on a face (v0, v1, v2) the points are ``v0 + (a*(v1-v0) +
    b*(v2-v0))/degree`` for b outer, a inner.
    """
    vertices = np.asarray(vertices, dtype=float)
    k = len(vertices) - 1
    if k == 0:
        return vertices.copy()
    pts = []
    if k == 1:
        for a in range(1, degree):
            pts.append(vertices[0] + a * (vertices[1] - vertices[0]) / degree)
    elif k == 2:
        for b in range(1, degree):
            for a in range(1, degree - b):
                pts.append(vertices[0] + (a * (vertices[1] - vertices[0]) + b * (vertices[2] - vertices[0])) / degree)
    else:
        for c in range(1, degree):
            for b in range(1, degree - c):
                for a in range(1, degree - b - c):
                    pts.append(
                        vertices[0]
                        + (a * (vertices[1] - vertices[0]) + b * (vertices[2] - vertices[0]) + c * (vertices[3] - vertices[0]))
                        / degree
                    )
    return np.array(pts).reshape(-1, vertices.shape[1])


def lagrange_nodes(cell, degree, discontinuous=False):
    cell = reference_cell(cell)
    if degree == 0:
        if not discontinuous:
            raise DegreeUnsupported("continuous Lagrange requires degree >= 1")
        centroid = np.mean(np.array(cell.vertices), axis=0)[None, :]
        entity_dofs = {dim: [() for _ in cell.topology[dim]] for dim in cell.topology}
        entity_dofs[cell.dim] = [(0,)]
        return NodeSet(centroid, (None,), {k: tuple(v) for k, v in entity_dofs.items()})
    points = []
    entity_dofs = {}
    for dim in sorted(cell.topology):
        ents = []
        for e in range(len(cell.topology[dim])):
            pts = entity_lattice(cell.entity_vertices(dim, e), degree)
            ents.append(tuple(range(len(points), len(points) + len(pts))))
            points.extend(pts)
        entity_dofs[dim] = tuple(ents)
    points = np.array(points)
    if discontinuous:
        entity_dofs = {dim: tuple(() for _ in cell.topology[dim]) for dim in cell.topology}
        entity_dofs[cell.dim] = (tuple(range(len(points))),)
    return NodeSet(points, (None,) * len(points), entity_dofs)


class NodalBasis:
    """Nodal basis Phi_i = sum_j alpha_ij Psi_j dual to a point-evaluation node set."""

    def __init__(self, cell, family, degree, prime, nodes, alpha, scalar=None):
        self.cell = cell
        self.family = family
        self.degree = degree
        self.prime = prime
        self.nodes = nodes
        self.alpha = alpha
        self._scalar = scalar

    @property
    def value_size(self):
        return self.cell.dim if self.family == "Vector Lagrange" else 1

    @property
    def scalar(self):
        return self._scalar or self

    @property
    def dim(self):
        return len(self.nodes)

    def __len__(self):
        return self.dim

    @property
    def entity_dofs(self):
        return self.nodes.entity_dofs

    def vandermonde(self):
        return self.scalar.prime.tabulate(self.scalar.nodes.points).T

    def tabulate(self, points, order=0):
        return tabulate(self, points, order)

    def __repr__(self):
        return f"NodalBasis({self.family!r}, {self.cell.shape!r}, {self.degree})"


def _solve_vandermonde(V):
    try:
        cond = np.linalg.cond(V)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise DegenerateNodeSet(f"degenerate node set (condition number {cond:.3e})")
    if cond > 1e8:
        logger.warning("Vandermonde matrix is ill-conditioned (cond = %.3e)", cond)
    lu = scipy.linalg.lu_factor(V)
    alpha_t = scipy.linalg.lu_solve(lu, np.eye(len(V)))
    return alpha_t.T


def nodal_basis_from_nodes(cell, prime, nodes, family="Lagrange", degree=None):
    """Solve V alpha^T = I for an arbitrary point-evaluation node set."""
    V = prime.tabulate(nodes.points).T
    if V.shape[0] != V.shape[1]:
        raise DegenerateNodeSet(f"degenerate node set: {V.shape[0]} nodes for a space of dimension {V.shape[1]}")
    alpha = _solve_vandermonde(V)
    return NodalBasis(cell, family, prime.degree if degree is None else degree, prime, nodes, alpha)


@lru_cache(maxsize=None)
def build_nodal_basis(cell, family, degree):
    """Construct the nodal basis for a Lagrange-type element."""
    cell = reference_cell(cell)
    family = canonical_family(family)
    if degree > MAX_DEGREE:
        raise DegreeUnsupported(f"degree unsupported: {degree} > {MAX_DEGREE}")
    if family == "Vector Lagrange":
        scalar = build_nodal_basis(cell, "Lagrange", degree)
        n = scalar.dim
        points = np.concatenate([scalar.nodes.points] * cell.dim)
        components = tuple(c for c in range(cell.dim) for _ in range(n))
        entity_dofs = {
            dim: tuple(tuple(c * n + k for c in range(cell.dim) for k in dofs) for dofs in ents)
            for dim, ents in scalar.nodes.entity_dofs.items()
        }
        nodes = NodeSet(points, components, entity_dofs)
        return NodalBasis(cell, family, degree, scalar.prime, nodes, scalar.alpha, scalar=scalar)
    nodes = lagrange_nodes(cell, degree, discontinuous=(family == "Discontinuous Lagrange"))
    prime = build_prime_basis(cell, degree)
    return nodal_basis_from_nodes(cell, prime, nodes, family, degree)


def tabulate(basis, points, order=0):
    """Tabulate a nodal basis (or its reference gradient) at ``points``."""
    if order not in (0, 1):
        raise UnsupportedDerivativeOrder(f"unsupported derivative order: {order}")
    scalar = basis.scalar
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if order == 0:
        vals = scalar.alpha @ scalar.prime.tabulate(X)
    else:
        _, grads = scalar.prime.tabulate(X, derivatives=True)
        vals = np.einsum("ij,jpd->ipd", scalar.alpha, grads)
    if basis.value_size == 1:
        return vals
    d = basis.value_size
    n = scalar.dim
    out = np.zeros((d * n, X.shape[0], d) + vals.shape[2:])
    for c in range(d):
        out[c * n:(c + 1) * n, :, c] = vals
    return out


def tabulate_components(basis, points, order=0):
    """Tabulation with an explicit component axis: (n, npts, ncomp[, d])."""
    vals = tabulate(basis, points, order)
    if basis.value_size == 1:
        return vals[:, :, None]
    return vals


# ---------------------------------------------------------------------------
# constrained spaces


class ConstrainedPrimeBasis:
    """Orthonormal basis of {v in P_q : l_i(v) = 0} as combinations of a parent basis."""

    def __init__(self, parent, coefficients):
        self.parent = parent
        self.cell = parent.cell
        self.degree = parent.degree
        self.coefficients = coefficients  # (n0, n)

    @property
    def dim(self):
        return self.coefficients.shape[0]

    def tabulate(self, points, derivatives=False):
        if derivatives:
            v, g = self.parent.tabulate(points, derivatives=True)
            return self.coefficients @ v, np.einsum("ij,jpd->ipd", self.coefficients, g)
        return self.coefficients @ self.parent.tabulate(points)


def constrained_prime_basis(prime, constraints, rtol=1e-10):
    """Prime basis for the common nullspace of linear functionals.

    Each constraint is a callable ``l(basis) -> array`` returning the values
    ``l(Psi_j)`` for every function of ``basis``.  The nullspace of the
    constraint matrix is taken from its SVD.
    """
    n = prime.dim
    if not constraints:
        return ConstrainedPrimeBasis(prime, np.eye(n))
    L = np.atleast_2d(np.array([np.asarray(l(prime), dtype=float) for l in constraints]))
    _, s, vt = np.linalg.svd(L)
    rank = int(np.sum(s > rtol * s.max())) if s.size and s.max() > 0 else 0
    if rank < len(constraints):
        raise DependentConstraints(
            f"dependent constraints: rank {rank} < {len(constraints)}, nullspace larger than {n - len(constraints)}"
        )
    return ConstrainedPrimeBasis(prime, vt[rank:].copy())


def integral_functional(basis):
    """l(v) = integral of v over the reference cell."""
    rule = make_quadrature(basis.cell, basis.degree)
    return basis.tabulate(rule.points) @ rule.weights


def edge_legendre_moment(edge, degree):
    """l(v) = integral of v against the Legendre polynomial of ``degree`` along an edge."""
    from scipy.special import eval_legendre

    def functional(basis):
        cell = basis.cell
        verts = cell.entity_vertices(1, edge)
        rule = make_quadrature("interval", basis.degree + degree)
        s = rule.points[:, 0]
        pts = verts[0] + s[:, None] * (verts[1] - verts[0])
        length = np.linalg.norm(verts[1] - verts[0])
        weights = rule.weights * eval_legendre(degree, 2 * s - 1) * length
        return basis.tabulate(pts) @ weights

    return functional


__all__ = [
    "NodeSet",
    "NodalBasis",
    "PrimeBasis",
    "build_nodal_basis",
    "constrained_prime_basis",
    "tabulate",
    "tabulate_components",
]
