"""Tensor-contraction representation of element tensors.

For an affine cell every monomial of a canonical form gives a term
``A^K = A0 : G_K`` where ``A0`` holds integrals over the reference cell and
``G_K`` collects the inverse Jacobian entries, the determinant and the
coefficient values of the cell.

Secondary axes of a term are enumerated in this order:

1. one reference-direction axis per derivative occurrence, following the
   factor order of the monomial,
2. bound spatial indices that are used both as a component (reference side)
   and as a derivative direction (geometry side), by bound-index number,
3. one axis per coefficient factor, over that coefficient's local basis.

Spatial indices used only as components are summed inside ``A0``; those used
only as derivative directions are summed inside ``G_K``.  Flattening is
row-major everywhere.
"""
import string
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from .errors import DegenerateCell, UnsupportedDerivativeOrder
from .fiat.elements import build_nodal_basis, tabulate_components
from .fiat.quadrature import make_quadrature
from .fiat.reference import reference_cell
from .forms.lowering import Bound

MAX_DENOMINATOR = 10080
SNAP_TOLERANCE = 1e-12

_LETTERS = [c for c in string.ascii_letters if c not in "Zq"]


def snap_rationals(values, max_denominator=MAX_DENOMINATOR, tol=SNAP_TOLERANCE):
    """Return an object array of Fractions if every entry is a small rational, else None."""
    values = np.asarray(values, dtype=float)
    unique, inverse = np.unique(values.ravel(), return_inverse=True)
    snapped = np.empty(len(unique), dtype=object)
    for n, x in enumerate(unique):
        fr = Fraction(float(x)).limit_denominator(max_denominator)
        if abs(float(fr) - x) > tol:
            return None
        snapped[n] = fr
    return snapped[inverse].reshape(values.shape)


def basis_for(element):
    return build_nodal_basis(element.cell, element.family, element.degree)


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class SecondaryAxis:
    kind: str  # "reference", "spatial" or "coefficient"
    extent: int
    origin: str


@dataclass(frozen=True, eq=False)
class GeometryTerm:
    """Recipe for G_K of one term.

    ``jacobian`` lists one ``(reference letter, direction)`` pair per
    derivative occurrence; the direction is a letter (secondary or summed)
    or a fixed integer.  ``coefficients`` pairs coefficient numbers with the
    letter of their secondary axis.  ``output`` is the secondary axes in
    order.  Letters absent from ``output`` are summed.
    """

    prefactor: float
    jacobian: tuple
    coefficients: tuple
    output: str
    dim: int

    def to_json(self):
        return {
            "prefactor": repr(float(self.prefactor)),
            "jacobian": [list(p) for p in self.jacobian],
            "coefficients": [list(c) for c in self.coefficients],
            "output": self.output,
            "dim": self.dim,
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            float(data["prefactor"]),
            tuple(tuple(p) for p in data["jacobian"]),
            tuple(tuple(c) for c in data["coefficients"]),
            data["output"],
            data["dim"],
        )

    def formula(self):
        """Plain-text rendering, e.g. ``G[a,b] = det(F') * sum_c dX[a]/dx[c] * dX[b]/dx[c]``."""
        summed = sorted({p[1] for p in self.jacobian if isinstance(p[1], str) and p[1] not in self.output})
        parts = []
        if self.prefactor != 1.0:
            parts.append(repr(self.prefactor))
        parts += [f"w{n}[{a}]" for n, a in self.coefficients]
        parts.append("det(F')")
        derivs = [f"dX[{a}]/dx[{b}]" for a, b in self.jacobian]
        if derivs:
            chunk = " * ".join(derivs)
            parts.append(f"sum_{''.join(summed)}({chunk})" if summed else chunk)
        lhs = f"G[{','.join(self.output)}]" if self.output else "G"
        return f"{lhs} = " + " * ".join(parts)


@dataclass(eq=False)
class ReferenceTerm:
    A0: np.ndarray
    exact: object  # object array of Fractions, or None
    primary_dims: tuple
    secondary: tuple
    geometry: GeometryTerm
    monomial: object = None
    quadrature_degree: int = 0

    @property
    def secondary_dims(self):
        return tuple(a.extent for a in self.secondary)

    @property
    def rank(self):
        return len(self.primary_dims) + len(self.secondary)

    @property
    def size_primary(self):
        return prod(self.primary_dims)

    @property
    def size_secondary(self):
        return prod(self.secondary_dims)

    def matrix(self, exact=False):
        """A0 flattened to |I_K| x |A| (row-major on both sides)."""
        src = self.exact if exact and self.exact is not None else self.A0
        return src.reshape(self.size_primary, self.size_secondary)


@dataclass(eq=False)
class ReferenceTensor:
    form: object
    terms: list = field(default_factory=list)

    @property
    def arity(self):
        return self.form.arity

    @property
    def primary_dims(self):
        return tuple(e.space_dim for e in self.form.arguments)

    @property
    def exact(self):
        return all(t.exact is not None for t in self.terms)

    def plan(self):
        return GeometryPlan(tuple(t.geometry for t in self.terms))

    def flattened(self):
        return FlattenedKernel.from_reference(self)


@dataclass(frozen=True, eq=False)
class GeometryPlan:
    terms: tuple

    @property
    def ranks(self):
        return tuple(len(t.output) for t in self.terms)


@dataclass(frozen=True, eq=False)
class CellGeometry:
    """Affine map data for a batch of cells (leading axis = cell)."""

    vertices: np.ndarray  # (nc, d+1, d)
    J: np.ndarray  # (nc, d, d), columns are vertex differences
    K: np.ndarray  # (nc, d, d), K[a, b] = dX_a/dx_b
    det: np.ndarray  # (nc,), signed

    @property
    def num_cells(self):
        return len(self.det)

    @property
    def dim(self):
        return self.J.shape[-1]


def cell_geometry(vertices):
    """Build geometry for one cell ``(d+1, d)`` or a batch ``(nc, d+1, d)``."""
    V = np.asarray(vertices, dtype=float)
    if V.ndim == 2:
        V = V[None]
    J = np.swapaxes(V[:, 1:, :] - V[:, :1, :], 1, 2)
    det = np.linalg.det(J)
    scale = np.max(np.abs(J), axis=(1, 2)) ** J.shape[-1]
    bad = np.abs(det) <= 1e-14 * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise DegenerateCell(f"degenerate cell: {int(np.sum(bad))} cell(s) with zero volume")
    K = np.linalg.inv(J)
    return CellGeometry(V, J, K, det)


# ---------------------------------------------------------------------------
# compiling a monomial


class _Letters:
    def __init__(self):
        self.pool = iter(_LETTERS)

    def __call__(self):
        return next(self.pool)


def _classify(monomial):
    """Split bound indices into reference-side only, geometry-side only, shared and coefficient."""
    a_side, g_side, coef = set(), set(), []
    for f in monomial.factors:
        if len(f.derivatives) > 1:
            raise UnsupportedDerivativeOrder(f"unsupported derivative order {len(f.derivatives)} (only first derivatives)")
        if isinstance(f.component, Bound):
            a_side.add(f.component)
        for x in f.derivatives:
            if isinstance(x, Bound):
                g_side.add(x)
        if not f.is_argument:
            coef.append(f.basis)
    shared = sorted(a_side & g_side)
    return a_side - g_side, g_side - a_side, shared, coef


def _quadrature_degree(form, monomial):
    return sum(max(form.element(f).degree - len(f.derivatives), 0) for f in monomial.factors)


def _factor_operand(table, f, basis_letter, comp_letter, ref_letter):
    """Slice a component tabulation (n, q, c[, d]) and return it with its subscripts."""
    if f.component is None:
        table = table[:, :, 0]
        subs = basis_letter + "q"
    elif isinstance(f.component, Bound):
        subs = basis_letter + "q" + comp_letter
    else:
        table = table[:, :, f.component]
        subs = basis_letter + "q"
    if f.derivatives:
        subs += ref_letter
    return table, subs


def _compile_term(form, monomial):
    d = reference_cell(form.cell).dim
    _, _, shared, coef = _classify(monomial)
    letter = _Letters()
    primary = [letter() for _ in range(form.arity)]
    bound = {Bound(n): letter() for n in range(len(monomial.ranges))}

    secondary, out = [], ""
    refs = []
    for j, f in enumerate(monomial.factors):
        ref = None
        if f.derivatives:
            ref = letter()
            what = f"v{f.number}" if f.is_argument else f"w{f.number}"
            secondary.append(SecondaryAxis("reference", d, f"reference derivative direction of factor {j} ({what})"))
            out += ref
        refs.append(ref)
    for b in shared:
        secondary.append(SecondaryAxis("spatial", monomial.ranges[b.number], f"spatial index {b!r}"))
        out += bound[b]
    coef_pairs = []
    for f in monomial.factors:
        if not f.is_argument:
            secondary.append(SecondaryAxis("coefficient", monomial.ranges[f.basis.number], f"basis of coefficient w{f.number}"))
            out += bound[f.basis]
            coef_pairs.append((f.number, bound[f.basis]))

    degree = _quadrature_degree(form, monomial)
    rule = make_quadrature(form.cell, degree)
    operands, subs = [], []
    for j, f in enumerate(monomial.factors):
        table = tabulate_components(basis_for(form.element(f)), rule.points, 1 if f.derivatives else 0)
        basis_letter = primary[f.number] if f.is_argument else bound[f.basis]
        comp_letter = bound.get(f.component) if isinstance(f.component, Bound) else None
        arr, s = _factor_operand(table, f, basis_letter, comp_letter, refs[j])
        operands.append(arr)
        subs.append(s)
    operands.append(np.asarray(rule.weights))
    subs.append("q")
    A0 = np.einsum(",".join(subs) + "->" + "".join(primary) + out, *operands, optimize=True)
    A0 = np.ascontiguousarray(A0, dtype=float)

    jac = []
    for j, f in enumerate(monomial.factors):
        for x in f.derivatives:
            jac.append((refs[j], bound[x] if isinstance(x, Bound) else int(x)))
    geometry = GeometryTerm(monomial.coefficient, tuple(jac), tuple(coef_pairs), out, d)

    exact = snap_rationals(A0)
    if exact is not None:
        A0 = exact.astype(float)
    primary_dims = tuple(e.space_dim for e in form.arguments)
    return ReferenceTerm(A0, exact, primary_dims, tuple(secondary), geometry, monomial, degree)


def compute_reference_tensor(form, group=True):
    """Compile a canonical form into reference tensors, one term per monomial.

    With ``group`` (the default) monomials differing only in their constant
    are merged first, so the strain form gives two terms rather than four.
    """
    if group:
        form = form.grouped()
    return ReferenceTensor(form, [_compile_term(form, m) for m in form.monomials])


def build_geometry_plan(form, group=True):
    """Geometry recipe alone (cheap; no reference integrals are computed)."""
    if group:
        form = form.grouped()
    terms = []
    for m in form.monomials:
        d = reference_cell(form.cell).dim
        _classify(m)
        letter = _Letters()
        for _ in range(form.arity):
            letter()
        bound = {Bound(n): letter() for n in range(len(m.ranges))}
        _, _, shared, _ = _classify(m)
        refs, jac, coefs, out = [], [], [], ""
        for f in m.factors:
            ref = letter() if f.derivatives else None
            refs.append(ref)
            out += ref or ""
        out += "".join(bound[b] for b in shared)
        for j, f in enumerate(m.factors):
            for x in f.derivatives:
                jac.append((refs[j], bound[x] if isinstance(x, Bound) else int(x)))
            if not f.is_argument:
                coefs.append((f.number, bound[f.basis]))
                out += bound[f.basis]
        terms.append(GeometryTerm(m.coefficient, tuple(jac), tuple(coefs), out, d))
    return GeometryPlan(tuple(terms))


# ---------------------------------------------------------------------------
# geometry evaluation


def _batch_coefficients(coefficients, nc):
    out = []
    for w in coefficients or ():
        w = np.asarray(w, dtype=float)
        out.append(np.broadcast_to(w, (nc, w.shape[-1])) if w.ndim == 1 else w)
    return out


def evaluate_geometry_term(term, geom, coefficients=()):
    """Evaluate G for every cell in ``geom``; returns shape (nc, *secondary_dims)."""
    nc = geom.num_cells
    ws = _batch_coefficients(coefficients, nc)
    operands, subs = [], []
    for a, b in term.jacobian:
        if isinstance(b, str):
            operands.append(geom.K)
            subs.append("Z" + a + b)
        else:
            operands.append(geom.K[:, :, b])
            subs.append("Z" + a)
    for number, a in term.coefficients:
        operands.append(ws[number])
        subs.append("Z" + a)
    scale = term.prefactor * np.abs(geom.det)
    if not operands:
        return scale
    G = np.einsum(",".join(subs) + "->Z" + term.output, *operands, optimize=True)
    return G * scale.reshape((nc,) + (1,) * len(term.output))


def evaluate_geometry(plan, geom, coefficients=()):
    """Evaluate all terms of a plan; one array (nc, *secondary dims) per term."""
    return [evaluate_geometry_term(t, geom, coefficients) for t in plan.terms]


def geometry_vector(plan, geom, coefficients=()):
    """Concatenated flattened geometry tensors g_K, shape (nc, sum |A_k|)."""
    nc = geom.num_cells
    return np.concatenate([G.reshape(nc, -1) for G in evaluate_geometry(plan, geom, coefficients)], axis=1)


# ---------------------------------------------------------------------------
# element tensors


@dataclass(eq=False)
class FlattenedKernel:
    """A^K = Abar g_K with terms concatenated column-wise."""

    matrix: np.ndarray  # (|I_K|, sum |A_k|)
    exact: object
    primary_dims: tuple
    term_sizes: tuple
    plan: GeometryPlan

    @classmethod
    def from_reference(cls, ref):
        mats = [t.matrix() for t in ref.terms]
        n = prod(ref.primary_dims)
        matrix = np.concatenate(mats, axis=1) if mats else np.zeros((n, 0))
        exact = None
        if ref.terms and ref.exact:
            exact = np.concatenate([t.matrix(exact=True) for t in ref.terms], axis=1)
        return cls(matrix, exact, ref.primary_dims, tuple(t.size_secondary for t in ref.terms), ref.plan())

    def __call__(self, g, exact=False):
        """Evaluate for a batch of geometry vectors g with shape (nc, sum |A_k|)."""
        g = np.atleast_2d(g)
        A = self.exact if exact and self.exact is not None else self.matrix
        out = g @ A.T
        return out.reshape((g.shape[0],) + self.primary_dims)


def element_tensor_affine(ref, g, exact=False):
    """Contract reference terms with evaluated geometry tensors.

    ``g`` is either the list returned by :func:`evaluate_geometry` (each of
    shape (nc, *secondary)) or a concatenated matrix (nc, sum |A_k|).
    """
    kernel = ref.flattened()
    if isinstance(g, (list, tuple)):
        nc = np.shape(g[0])[0] if g else 1
        g = np.concatenate([np.reshape(G, (nc, -1)) for G in g], axis=1)
    return kernel(g, exact=exact)


def element_tensors(ref, vertices, coefficients=()):
    """Batched affine-path element tensors for cells with the given vertices."""
    geom = vertices if isinstance(vertices, CellGeometry) else cell_geometry(vertices)
    return element_tensor_affine(ref, evaluate_geometry(ref.plan(), geom, coefficients))


# ---------------------------------------------------------------------------
# quadrature representation (reference tensor gains a point axis)


@dataclass(eq=False)
class QuadratureTerm:
    A0: np.ndarray  # (*primary, *secondary, nq)
    geometry: object  # callable (geom, coefficients) -> (nc, *secondary, nq)
    secondary_dims: tuple
    npoints: int


def _quadrature_term(form, monomial, rule):
    """Per-point representation: coefficients are evaluated at the points and join G."""
    d = reference_cell(form.cell).dim
    if monomial.max_derivative_order() > 1:
        raise UnsupportedDerivativeOrder("unsupported derivative order (only first derivatives)")
    letter = _Letters()
    primary = [letter() for _ in range(form.arity)]
    bound = {Bound(n): letter() for n in range(len(monomial.ranges))}
    arg_comp = {f.component for f in monomial.factors if f.is_argument and isinstance(f.component, Bound)}
    g_side = set()
    for f in monomial.factors:
        g_side.update(x for x in f.derivatives if isinstance(x, Bound))
        if not f.is_argument and isinstance(f.component, Bound):
            g_side.add(f.component)
    shared = sorted(arg_comp & g_side)
    refs = [letter() if f.is_argument and f.derivatives else None for f in monomial.factors]
    sec = "".join(r for r in refs if r) + "".join(bound[b] for b in shared)
    sec_dims = tuple([d] * sum(1 for r in refs if r) + [monomial.ranges[b.number] for b in shared])

    operands, subs = [], []
    for j, f in enumerate(monomial.factors):
        if not f.is_argument:
            continue
        table = tabulate_components(basis_for(form.element(f)), rule.points, 1 if f.derivatives else 0)
        comp = bound.get(f.component) if isinstance(f.component, Bound) else None
        arr, s = _factor_operand(table, f, primary[f.number], comp, refs[j])
        operands.append(arr)
        subs.append(s)
    operands.append(np.asarray(rule.weights))
    subs.append("q")
    A0 = np.einsum(",".join(subs) + "->" + "".join(primary) + sec + "q", *operands, optimize=True)

    coef_tables = {}
    for f in monomial.factors:
        if not f.is_argument:
            key = (f.number, bool(f.derivatives))
            if key not in coef_tables:
                coef_tables[key] = tabulate_components(basis_for(form.element(f)), rule.points, int(bool(f.derivatives)))

    def geometry(geom, coefficients=()):
        nc = geom.num_cells
        ws = _batch_coefficients(coefficients, nc)
        ops, ss = [], []
        for j, f in enumerate(monomial.factors):
            if f.is_argument:
                for x in f.derivatives:
                    if isinstance(x, Bound):
                        ops.append(geom.K)
                        ss.append("Z" + refs[j] + bound[x])
                    else:
                        ops.append(geom.K[:, :, x])
                        ss.append("Z" + refs[j])
                continue
            # coefficient value (or physical gradient) at every point
            table = coef_tables[(f.number, bool(f.derivatives))]
            vals = np.einsum("zn,nq...->zq...", ws[f.number], table)
            if f.derivatives:
                vals = np.einsum("zqca,zab->zqcb", vals, geom.K)
            s = "Zq"
            if f.component is None:
                vals = vals[:, :, 0]
            elif isinstance(f.component, Bound):
                s += bound[f.component]
            else:
                vals = vals[:, :, f.component]
            if f.derivatives:
                x = f.derivatives[0]
                if isinstance(x, Bound):
                    s += bound[x]
                else:
                    vals = vals[..., x]
            ops.append(vals)
            ss.append(s)
        ops.append(np.ones((nc, len(rule.weights))))
        ss.append("Zq")
        G = np.einsum(",".join(ss) + "->Z" + sec + "q", *ops, optimize=True)
        scale = monomial.coefficient * np.abs(geom.det)
        return G * scale.reshape((nc,) + (1,) * (G.ndim - 1))

    return QuadratureTerm(A0, geometry, sec_dims, len(rule.weights))


def quadrature_representation(form, degree=None, group=True):
    """Per-term point-axis representation; ``degree`` defaults to exact integration."""
    if group:
        form = form.grouped()
    out = []
    for m in form.monomials:
        q = _quadrature_degree(form, m) if degree is None else degree
        out.append(_quadrature_term(form, m, make_quadrature(form.cell, q)))
    return out


def element_tensor_quadrature(form, vertices, coefficients=(), degree=None, representation=None):
    """Element tensors through the point-axis representation, batched over cells."""
    geom = vertices if isinstance(vertices, CellGeometry) else cell_geometry(vertices)
    terms = representation if representation is not None else quadrature_representation(form, degree)
    dims = tuple(e.space_dim for e in form.arguments)
    out = np.zeros((geom.num_cells,) + dims)
    for t in terms:
        G = t.geometry(geom, coefficients)
        nI = prod(dims)
        A = t.A0.reshape(nI, -1)
        out += (G.reshape(geom.num_cells, -1) @ A.T).reshape(out.shape)
    return out


# ---------------------------------------------------------------------------
# operation counts


def flop_count(ref, schedule=None):
    """Multiply-add pair models for the available evaluation strategies.

    ``direct`` and ``matvec``: |I_K| * sum_k |A_k|.
    ``quadrature``: N_q * |I_K| * sum_k prod(spatial index ranges), the cost of
    looping over points and summed spatial indices directly.
    ``quadrature_tensor``: N_q * |I_K| * sum_k |A_k|, the point-axis tensor form.
    """
    nI = prod(ref.primary_dims)
    sizes = [t.size_secondary for t in ref.terms]
    counts = {"direct": nI * sum(sizes), "matvec": nI * sum(sizes)}
    quad = qt = 0
    for t in ref.terms:
        nq = len(make_quadrature(ref.form.cell, t.quadrature_degree))
        coef_axes = {f.basis for f in t.monomial.factors if not f.is_argument}
        spatial = [r for n, r in enumerate(t.monomial.ranges) if Bound(n) not in coef_axes]
        quad += nq * nI * prod(spatial)
        qt += nq * nI * t.size_secondary
    counts["quadrature"] = quad
    counts["quadrature_tensor"] = qt
    if schedule is not None:
        counts["schedule"] = schedule.map_count
        counts["schedule_discounted"] = schedule.discounted_map_count
    return counts


# ---------------------------------------------------------------------------
# LaTeX emission


def _tex_index(x, letters):
    if isinstance(x, Bound):
        return letters[x]
    return str(int(x) + 1)


def to_latex(ref):
    """Representation tables (reference tensor and geometry tensor) as LaTeX."""
    out = []
    for k, t in enumerate(ref.terms):
        m = t.monomial
        letters = {}
        greek_alpha = iter(range(1, 100))
        greek_beta = iter(range(1, 100))
        sec_names = {}
        for ax_letter in t.geometry.output:
            sec_names[ax_letter] = rf"\alpha_{{{next(greek_alpha)}}}"
        # map bound indices to alpha (secondary) or beta (summed) names
        _, _, shared, _ = _classify(m)
        for n in range(len(m.ranges)):
            b = Bound(n)
            letters[b] = None
        ref_names = iter(sec_names[c] for c in t.geometry.output)
        factor_ref = []
        for f in m.factors:
            factor_ref.append(next(ref_names) if f.derivatives else None)
        for b in shared:
            letters[b] = next(ref_names)
        for f in m.factors:
            if not f.is_argument:
                letters[f.basis] = next(ref_names)
        for b, name in letters.items():
            if name is None:
                letters[b] = rf"\beta_{{{next(greek_beta)}}}"
        a_only, g_only, _, _ = _classify(m)
        factors = []
        for j, f in enumerate(m.factors):
            sup = str(f.number + 1) if f.is_argument else str(ref.arity + f.number + 1)
            sub = f"i_{{{f.number + 1}}}" if f.is_argument else letters[f.basis]
            phi = rf"\Phi^{{{sup}}}_{{{sub}}}"
            if f.component is not None:
                phi += f"[{_tex_index(f.component, letters)}]"
            if f.derivatives:
                phi = rf"\frac{{\partial {phi}}}{{\partial X_{{{factor_ref[j]}}}}}"
            factors.append(phi)
        sums_a = "".join(rf"\sum_{{{letters[b]}=1}}^{{{m.ranges[b.number]}}} " for b in sorted(a_only))
        a_line = rf"$A^{{0,{k + 1}}}_{{i\alpha}}$ &$=$& ${sums_a}\int_{{K_0}} " + " ".join(factors) + r" \, dX$"
        g_parts = []
        if m.coefficient != 1.0:
            g_parts.append(f"{m.coefficient:g}")
        for f in m.factors:
            if not f.is_argument:
                g_parts.append(rf"w^K_{{{letters[f.basis]}}}")
        g_parts.append(r"\det F_K'")
        sums_g = "".join(rf"\sum_{{{letters[b]}=1}}^{{{m.ranges[b.number]}}} " for b in sorted(g_only))
        derivs = []
        for j, f in enumerate(m.factors):
            for x in f.derivatives:
                derivs.append(rf"\frac{{\partial X_{{{factor_ref[j]}}}}}{{\partial x_{{{_tex_index(x, letters)}}}}}")
        if derivs:
            g_parts.append(sums_g + " ".join(derivs))
        g_line = rf"$G_{{K,{k + 1}}}^{{\alpha}}$ &$=$& $" + " ".join(g_parts) + "$"
        out.append(
            "\\begin{tabular}{|rcl|c|}\n\\hline\n"
            f"{a_line} & $|i\\alpha| = {t.rank}$ \\\\\n\\hline\n"
            f"{g_line} & $|\\alpha| = {len(t.secondary)}$ \\\\\n\\hline\n"
            "\\end{tabular}"
        )
    return "\n\n".join(out) + "\n"
