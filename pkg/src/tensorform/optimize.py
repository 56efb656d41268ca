"""Operation-count reduction for the contraction A^K = A0 : G_K.

Every retained entry of the element tensor is an inner product
``a_i . g``.  Entries whose vectors are related (equal, negated, collinear or
close in Hamming distance) can be computed from one another cheaply.  The
relations form a weighted complete graph; a minimum spanning tree of that
graph, traversed breadth first from a root entry, gives a straight-line
schedule whose cost is ``|A| + weight(tree)`` multiply-add pairs.
"""
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm, prod

import numpy as np

from .errors import ScheduleVerificationFailed, SymmetryAssertionFailed
from .tensorrep import cell_geometry, evaluate_geometry, geometry_vector

FLOAT_TOL = 1e-12


# ---------------------------------------------------------------------------
# flattening and symmetry reduction


@dataclass(eq=False)
class ContractionVectors:
    """Rows a_i of the flattened reference tensor, possibly symmetry reduced.

    ``groups[k]`` lists the full geometry-vector positions folded into
    reduced position ``k``: the reduced vector sums the columns of a group
    and the reduced geometry vector takes its first member.  ``writeback``
    maps every flat primary index to the retained row that supplies it.
    """

    indices: list  # primary multiindex per retained row
    vectors: np.ndarray  # (n_retained, L) float
    exact: object  # object array of Fractions or None
    groups: list
    writeback: np.ndarray  # (|I_K|,) -> retained row
    primary_dims: tuple
    full_length: int

    @property
    def length(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.indices)

    def reduce_geometry(self, g):
        """Map full geometry vectors (nc, L_full) to the reduced ones (nc, L)."""
        first = [grp[0] for grp in self.groups]
        return np.asarray(g)[..., first]

    def direct_count(self):
        return len(self) * self.length


def _symmetric_rank2(term, cell, rng):
    """True when the term's geometry tensor is a symmetric square matrix for random cells."""
    if len(term.secondary) != 2 or term.secondary[0].extent != term.secondary[1].extent:
        return False
    from .tensorrep import GeometryPlan

    geom = cell_geometry(_random_cells(cell, 4, rng))
    coefs = [rng.standard_normal((4, n)) for n in _coefficient_dims(term)]
    G = evaluate_geometry(GeometryPlan((term.geometry,)), geom, coefs)[0]
    return np.allclose(G, np.swapaxes(G, 1, 2), rtol=FLOAT_TOL, atol=FLOAT_TOL * np.abs(G).max())


def _coefficient_dims(term):
    dims = {}
    for f in term.monomial.factors:
        if not f.is_argument:
            dims[f.number] = term.monomial.ranges[f.basis.number]
    return [dims[n] for n in sorted(dims)]


def _random_cells(cell, n, rng):
    from .fiat.reference import reference_cell

    ref = reference_cell(cell)
    base = np.array(ref.vertices)
    out = []
    while len(out) < n:
        V = base + 0.3 * rng.standard_normal(base.shape)
        J = (V[1:] - V[0]).T
        if abs(np.linalg.det(J)) > 0.05:
            out.append(V)
    return np.array(out)


def random_geometry(ref, n, rng):
    """Geometry vectors (n, sum |A_k|) from random affine cells and coefficients."""
    geom = cell_geometry(_random_cells(ref.form.cell, n, rng))
    coefs = [rng.standard_normal((n, e.space_dim)) for e in ref.form.coefficients]
    return geometry_vector(ref.plan(), geom, coefs)


def flatten_and_reduce(ref, symmetric_output=False, symmetric_geometry=False, seed=0):
    """Contraction vectors for a compiled form, with optional symmetry reduction.

    Symmetries are asserted by the caller and checked numerically; a claim
    that does not hold raises :class:`SymmetryAssertionFailed`.
    """
    rng = np.random.default_rng(seed)
    kernel = ref.flattened()
    A = kernel.matrix
    exact = kernel.exact
    nI = A.shape[0]

    groups = []
    offset = 0
    for term in ref.terms:
        size = term.size_secondary
        if symmetric_geometry and len(term.secondary) == 2:
            if not _symmetric_rank2(term, ref.form.cell, rng):
                raise SymmetryAssertionFailed("symmetry assertion failed: geometry tensor is not symmetric")
            n = term.secondary[0].extent
            for a in range(n):
                for b in range(a, n):
                    groups.append((offset + a * n + b,) if a == b else (offset + a * n + b, offset + b * n + a))
        else:
            groups.extend((offset + k,) for k in range(size))
        offset += size
    if symmetric_geometry and all(len(grp) == 1 for grp in groups) and any(len(t.secondary) for t in ref.terms):
        raise SymmetryAssertionFailed("symmetry assertion failed: no symmetric rank-2 geometry tensor to fold")

    def fold(M):
        return np.stack([sum(M[:, k] for k in grp) for grp in groups], axis=1) if groups else M[:, :0]

    vectors = fold(A)
    exact_vectors = fold(exact) if exact is not None else None

    all_indices = list(np.ndindex(*ref.primary_dims)) if ref.primary_dims else [()]
    writeback = np.arange(nI)
    retained = list(range(nI))
    if symmetric_output:
        dims = ref.primary_dims
        if len(dims) != 2 or dims[0] != dims[1] or ref.form.arguments[0] != ref.form.arguments[1]:
            raise SymmetryAssertionFailed("symmetry assertion failed: output symmetry needs two equal arguments")
        g = random_geometry(ref, 3, rng)
        AK = kernel(g)
        if not np.allclose(AK, np.swapaxes(AK, 1, 2), rtol=FLOAT_TOL, atol=FLOAT_TOL * max(1.0, np.abs(AK).max())):
            raise SymmetryAssertionFailed("symmetry assertion failed: element tensor is not symmetric")
        n = dims[0]
        retained = [i * n + j for i in range(n) for j in range(i, n)]
        pos = {flat: k for k, flat in enumerate(retained)}
        writeback = np.array([pos[min(i, j) * n + max(i, j)] for i in range(n) for j in range(n)])
    else:
        writeback = np.arange(nI)

    return ContractionVectors(
        indices=[all_indices[k] for k in retained],
        vectors=vectors[retained],
        exact=exact_vectors[retained] if exact_vectors is not None else None,
        groups=groups,
        writeback=writeback,
        primary_dims=tuple(ref.primary_dims),
        full_length=A.shape[1],
    )


# ---------------------------------------------------------------------------
# relations


@dataclass(frozen=True)
class Relation:
    """How to obtain the target entry from the source entry.

    kind is ``equal``, ``negate``, ``scale`` (target = alpha * source) or
    ``hamming`` (target = sign * source + sum_k delta_k * g[position_k]).
    """

    kind: str
    weight: int
    alpha: object = None
    sign: int = 1
    positions: tuple = ()
    deltas: tuple = ()

    def to_json(self):
        return {
            "kind": self.kind,
            "weight": self.weight,
            "alpha": _num_json(self.alpha),
            "sign": self.sign,
            "positions": list(self.positions),
            "deltas": [_num_json(x) for x in self.deltas],
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            data["kind"],
            data["weight"],
            _num_from_json(data["alpha"]),
            data["sign"],
            tuple(data["positions"]),
            tuple(_num_from_json(x) for x in data["deltas"]),
        )


def _num_json(x):
    if x is None:
        return None
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return repr(float(x))


def _num_from_json(x):
    if x is None:
        return None
    if isinstance(x, list):
        return Fraction(x[0], x[1])
    return float(x)


def _is_exact(u):
    return isinstance(u, np.ndarray) and u.dtype == object


def _close(a, b, exact):
    if exact:
        return a == b
    return abs(a - b) <= FLOAT_TOL * max(1.0, abs(a), abs(b))


def relation(u, v):
    """Cheapest relation deriving ``v`` from ``u`` and its multiply-add cost.

    Equality and negation cost nothing, a collinear vector costs one
    multiplication, otherwise the cost is the extended Hamming distance
    (number of differing entries, allowing a negation of ``u``).
    """
    exact = _is_exact(u) or _is_exact(v)
    u = list(u)
    v = list(v)
    if len(u) != len(v):
        raise ValueError("relation between vectors of different lengths")
    if all(_close(a, b, exact) for a, b in zip(u, v)):
        return Relation("equal", 0)
    if all(_close(-a, b, exact) for a, b in zip(u, v)):
        return Relation("negate", 0, sign=-1)
    best = None
    for sign in (1, -1):
        diff = [k for k, (a, b) in enumerate(zip(u, v)) if not _close(sign * a, b, exact)]
        deltas = tuple(v[k] - sign * u[k] for k in diff)
        cand = Relation("hamming", len(diff), sign=sign, positions=tuple(diff), deltas=deltas)
        if best is None or cand.weight < best.weight:
            best = cand
    p = max(range(len(u)), key=lambda k: abs(u[k])) if u else 0
    if u and u[p] != 0 and v[p] != 0:
        alpha = v[p] / u[p]
        if all(_close(alpha * a, b, exact) for a, b in zip(u, v)) and best.weight > 1:
            return Relation("scale", 1, alpha=alpha)
    return best


def _integer_matrix(exact):
    """Scale a Fraction matrix to integers with a common denominator."""
    den = 1
    for x in exact.ravel():
        den = lcm(den, x.denominator)
    ints = np.array([[int(x * den) for x in row] for row in exact], dtype=object)
    if ints.size and max(abs(int(x)) for x in ints.ravel()) < 2**31:
        ints = ints.astype(np.int64)
    return ints


def relation_weights(vectors):
    """All-pairs relation weights (upper triangle), vectorized per row."""
    exact = vectors.exact is not None
    X = _integer_matrix(vectors.exact) if exact else vectors.vectors
    n, L = X.shape
    W = np.zeros((n, n), dtype=np.int64)
    if n == 0:
        return W
    scale = max(1.0, float(np.abs(X).max())) if not exact and X.size else 1.0
    tol = FLOAT_TOL * scale

    def neq(a, b):
        return (a != b) if exact else (np.abs(a - b) > tol)

    pivots = np.argmax(np.abs(X), axis=1) if L else np.zeros(n, dtype=int)
    for i in range(n - 1):
        u = X[i]
        V = X[i + 1:]
        h = np.minimum(neq(V, u).sum(axis=1), neq(V, -u).sum(axis=1))
        p = pivots[i]
        if L and u[p] != 0:
            vp = V[:, p]
            # v collinear with u  <=>  v * u_p == u * v_p entrywise (and v_p != 0)
            col = ~neq(V * u[p], np.outer(vp, u)).any(axis=1) & (vp != 0)
            h = np.where(col & (h > 1), 1, h)
        W[i, i + 1:] = h
    return W + W.T


# ---------------------------------------------------------------------------
# minimum spanning tree


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


@dataclass(eq=False)
class RelationGraph:
    weights: np.ndarray  # (n, n) symmetric
    tree: list  # (weight, u, v) with u < v

    @property
    def tree_weight(self):
        return sum(w for w, _, _ in self.tree)


def minimum_spanning_tree(vectors, weights=None):
    """Kruskal with ties broken by (weight, smaller vertex, larger vertex)."""
    W = relation_weights(vectors) if weights is None else weights
    n = W.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, W[iu, ju]))
    uf = _UnionFind(n)
    tree = []
    for k in order:
        a, b = int(iu[k]), int(ju[k])
        if uf.union(a, b):
            tree.append((int(W[a, b]), a, b))
            if len(tree) == n - 1:
                break
    return RelationGraph(W, tree)


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Operation:
    target: int
    source: int
    relation: Relation


def _discounted(values):
    return sum(1 for x in values if x != 0 and abs(x) != 1)


@dataclass(eq=False)
class EvaluationSchedule:
    vectors: ContractionVectors
    root: int
    operations: list
    tree_weight: int
    certificate: dict = field(default_factory=dict)

    @property
    def map_count(self):
        return self.vectors.length + self.tree_weight

    @property
    def discounted_map_count(self):
        root_vec = self._root_vector()
        count = _discounted(root_vec)
        for op in self.operations:
            r = op.relation
            if r.kind == "scale":
                count += 1
            elif r.kind == "hamming":
                count += _discounted(r.deltas)
        return count

    def _root_vector(self):
        src = self.vectors.exact if self.vectors.exact is not None else self.vectors.vectors
        return list(src[self.root])

    def evaluate(self, g, exact=False):
        """Element tensors for a batch of full geometry vectors (nc, L_full)."""
        vecs = self.vectors
        g = np.atleast_2d(g)
        gr = vecs.reduce_geometry(g)
        if exact:
            root = np.array(self._root_vector(), dtype=object)
            gr = gr.astype(object)
        else:
            root = vecs.vectors[self.root]
        y = np.zeros((g.shape[0], len(vecs)), dtype=object if exact else float)
        y[:, self.root] = gr @ root
        for op in self.operations:
            r = op.relation
            src = y[:, op.source]
            if r.kind == "equal":
                val = src
            elif r.kind == "negate":
                val = -src
            elif r.kind == "scale":
                val = (r.alpha if exact else float(r.alpha)) * src
            else:
                val = src if r.sign == 1 else -src
                for k, dlt in zip(r.positions, r.deltas):
                    val = val + (dlt if exact else float(dlt)) * gr[:, k]
            y[:, op.target] = val
        full = y[:, vecs.writeback]
        return full.reshape((g.shape[0],) + vecs.primary_dims)

    def to_json(self):
        return {
            "root": self.root,
            "tree_weight": self.tree_weight,
            "operations": [[op.target, op.source, op.relation.to_json()] for op in self.operations],
            "certificate": self.certificate,
        }

    def dump(self):
        """Assignment list in evaluation order, one line per retained entry."""
        vecs = self.vectors
        name = lambda k: "A[" + ",".join(str(x) for x in vecs.indices[k]) + "]"
        gname = lambda k: "G[" + ",".join(str(x) for x in vecs.groups[k]) + "]"
        fmt = lambda x: str(x) if isinstance(x, Fraction) else f"{float(x):.17g}"
        rhs = ""
        for k, a in enumerate(self._root_vector()):
            if a != 0:
                sep = (" - " if rhs else "-") if a < 0 else (" + " if rhs else "")
                rhs += f"{sep}{fmt(abs(a))}*{gname(k)}"
        lines = [f"{name(self.root)} = " + (rhs or "0")]
        for op in self.operations:
            r = op.relation
            src = name(op.source)
            if r.kind == "equal":
                rhs = src
            elif r.kind == "negate":
                rhs = f"-{src}"
            elif r.kind == "scale":
                rhs = f"{fmt(r.alpha)}*{src}"
            else:
                rhs = src if r.sign == 1 else f"-{src}"
                rhs += "".join(
                    f" - {fmt(-dl)}*{gname(k)}" if dl < 0 else f" + {fmt(dl)}*{gname(k)}"
                    for k, dl in zip(r.positions, r.deltas)
                )
            lines.append(f"{name(op.target)} = {rhs}")
        lines.append(f"# multiply-add pairs: {self.map_count} (discounting 0/1 multiplies: {self.discounted_map_count})")
        return "\n".join(lines) + "\n"


def choose_root(vectors):
    """Vertex with the cheapest inner product, ties broken by index."""
    src = vectors.exact if vectors.exact is not None else vectors.vectors
    costs = [_discounted(list(row)) for row in src]
    return min(range(len(costs)), key=lambda k: (costs[k], k))


def emit_schedule(vectors, tree=None, root=None):
    """Breadth-first traversal of the spanning tree from ``root``."""
    if tree is None:
        tree = minimum_spanning_tree(vectors)
    n = len(vectors)
    root = choose_root(vectors) if root is None else root
    adj = {k: [] for k in range(n)}
    for _, a, b in tree.tree:
        adj[a].append(b)
        adj[b].append(a)
    src = vectors.exact if vectors.exact is not None else vectors.vectors
    ops = []
    seen = {root}
    queue = deque([root])
    while queue:
        s = queue.popleft()
        for t in sorted(adj[s]):
            if t in seen:
                continue
            seen.add(t)
            ops.append(Operation(t, s, relation(src[s], src[t])))
            queue.append(t)
    weight = sum(op.relation.weight for op in ops)
    sched = EvaluationSchedule(vectors, root, ops, weight)
    sched.certificate = {
        "root_length": vectors.length,
        "tree_weight": weight,
        "map_count": sched.map_count,
        "discounted_map_count": sched.discounted_map_count,
        "direct_count": vectors.direct_count(),
        "full_direct_count": prod(vectors.primary_dims) * vectors.full_length,
    }
    return sched


def optimize(ref, symmetric_output=False, symmetric_geometry=False):
    """Flatten, reduce, build the tree and emit the schedule in one call."""
    vectors = flatten_and_reduce(ref, symmetric_output, symmetric_geometry)
    return emit_schedule(vectors, minimum_spanning_tree(vectors))


def schedule_from_json(vectors, data):
    ops = [Operation(t, s, Relation.from_json(r)) for t, s, r in data["operations"]]
    sched = EvaluationSchedule(vectors, data["root"], ops, data["tree_weight"])
    sched.certificate = dict(data["certificate"])
    return sched


def verify_schedule(schedule, ref, trials=100, seed=1, tol=1e-9):
    """Randomized comparison against the direct contraction on random cells."""
    rng = np.random.default_rng(seed)
    g = random_geometry(ref, trials, rng)
    direct = ref.flattened()(g)
    got = schedule.evaluate(g)
    scale = max(1.0, float(np.abs(direct).max()))
    deviation = float(np.abs(got - direct).max()) / scale if direct.size else 0.0
    report = {
        "trials": trials,
        "max_deviation": deviation,
        "map_count": schedule.map_count,
        "discounted_map_count": schedule.discounted_map_count,
        "direct_count": schedule.vectors.direct_count(),
    }
    if not deviation <= tol:
        raise ScheduleVerificationFailed(f"schedule verification failed: deviation {deviation:.3e} > {tol:g}")
    return report
