"""Lowering of form expressions to a canonical list of monomials.

A monomial is a scalar constant times a product of factors.  Each factor
refers to an argument slot (test/trial function) or to a coefficient
function, selects a component, applies first-order spatial derivatives and
binds its basis-function index either to a primary index (arguments) or to a
bound summation index (coefficients, expanded in their nodal basis).  All
remaining summation indices are bound indices with a finite range.
"""
import hashlib
import json
from dataclasses import dataclass, replace

from ..errors import FormError, NotLowerable
from . import dsl


@dataclass(frozen=True, order=True)
class Bound:
    number: int

    def __repr__(self):
        return f"b{self.number}"


@dataclass(frozen=True)
class Primary:
    slot: int

    def __repr__(self):
        return f"i{self.slot}"


@dataclass(frozen=True)
class CanonicalFactor:
    kind: str  # "argument" or "coefficient"
    number: int  # argument slot or coefficient number
    component: object  # None, int or Bound
    derivatives: tuple  # of int or Bound
    basis: object  # Primary or Bound

    @property
    def is_argument(self):
        return self.kind == "argument"


def _encode_index(x):
    if x is None:
        return [0, 0]
    if isinstance(x, Bound):
        return [2, x.number]
    if isinstance(x, Primary):
        return [3, x.slot]
    return [1, int(x)]


def _decode_index(enc):
    tag, value = enc
    return {0: lambda v: None, 1: int, 2: Bound, 3: Primary}[tag](value)


def encode_factor(f):
    return [
        0 if f.is_argument else 1,
        f.number,
        _encode_index(f.component),
        [_encode_index(x) for x in f.derivatives],
        _encode_index(f.basis),
    ]


def decode_factor(enc):
    kind, number, comp, derivs, basis = enc
    return CanonicalFactor(
        "argument" if kind == 0 else "coefficient",
        number,
        _decode_index(comp),
        tuple(_decode_index(x) for x in derivs),
        _decode_index(basis),
    )


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    factors: tuple
    ranges: tuple  # extent of each bound index

    @property
    def m(self):
        return len(self.factors)

    def arguments(self):
        return [f for f in self.factors if f.is_argument]

    def coefficient_factors(self):
        return [f for f in self.factors if not f.is_argument]

    def structure(self):
        return [[encode_factor(f) for f in self.factors], list(self.ranges)]

    def encode(self):
        return {"coefficient": repr(float(self.coefficient)), "factors": self.structure()[0], "ranges": list(self.ranges)}

    @classmethod
    def decode(cls, data):
        return cls(float(data["coefficient"]), tuple(decode_factor(f) for f in data["factors"]), tuple(data["ranges"]))

    def max_derivative_order(self):
        return max((len(f.derivatives) for f in self.factors), default=0)


@dataclass(frozen=True)
class CanonicalForm:
    arity: int
    arguments: tuple  # ElementSpec per argument slot
    coefficients: tuple  # ElementSpec per coefficient number
    monomials: tuple

    def encode(self):
        return {
            "arity": self.arity,
            "arguments": [e.to_json() for e in self.arguments],
            "coefficients": [e.to_json() for e in self.coefficients],
            "monomials": [m.encode() for m in self.monomials],
        }

    @classmethod
    def decode(cls, data):
        spec = lambda d: dsl.ElementSpec(d["family"], d["cell"], d["degree"])
        return cls(
            data["arity"],
            tuple(spec(e) for e in data["arguments"]),
            tuple(spec(e) for e in data["coefficients"]),
            tuple(Monomial.decode(m) for m in data["monomials"]),
        )

    @property
    def signature(self):
        return signature(self)

    @property
    def cell(self):
        cells = {e.cell for e in self.arguments + self.coefficients}
        if len(cells) != 1:
            raise FormError(f"form must live on exactly one cell type, got {sorted(cells)}")
        return cells.pop()

    def element(self, factor):
        return (self.arguments if factor.is_argument else self.coefficients)[factor.number]

    def grouped(self):
        """Merge monomials that differ only in their scalar constant."""
        merged = {}
        for m in self.monomials:
            key = json.dumps(m.structure())
            if key in merged:
                merged[key] = replace(merged[key], coefficient=merged[key].coefficient + m.coefficient)
            else:
                merged[key] = m
        monomials = tuple(m for m in merged.values() if m.coefficient != 0.0)
        return replace(self, monomials=monomials)


def signature(form):
    """Deterministic digest of the canonical structure (names play no role)."""
    text = json.dumps(form.encode(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# lowering


def _substitute(term, old, new):
    sub = lambda x: new if x is old else x
    factors = tuple(
        replace(f, component=sub(f.component), derivatives=tuple(sub(x) for x in f.derivatives)) for f in term.factors
    )
    deltas = tuple(replace(dl, a=sub(dl.a), b=sub(dl.b)) for dl in term.deltas)
    return replace(term, factors=factors, deltas=deltas)


def _eliminate_deltas(term):
    """Resolve Kronecker deltas by index substitution.  Returns None for a zero term."""
    while term.deltas:
        dl, rest = term.deltas[0], term.deltas[1:]
        term = replace(term, deltas=rest)
        a, b = dl.a, dl.b
        if a is b:
            term = replace(term, coefficient=term.coefficient * dl.extent)
        elif isinstance(a, dsl.Index):
            term = _substitute(term, a, b)
        elif isinstance(b, dsl.Index):
            term = _substitute(term, b, a)
        elif a != b:
            return None
    return term


def _canonical_factors(raw, d):
    """Label indices by first appearance and sort factors until stable.

    ``raw`` holds (kind, number, component, derivatives, element) with dsl
    Index objects; returns canonical factors and the bound-index ranges.
    """
    order = list(range(len(raw)))
    previous = None
    while True:
        labels = {}
        extents = {}

        def label(x, extent):
            if not isinstance(x, dsl.Index):
                return x
            if x not in labels:
                labels[x] = Bound(len(labels))
                extents[labels[x]] = extent
            elif extents[labels[x]] != extent:
                raise FormError(f"index {x!r} used with inconsistent ranges {extents[labels[x]]} and {extent}")
            return labels[x]

        factors = []
        for n in order:
            kind, number, comp, derivs, element, basis_token = raw[n]
            c = label(comp, element.value_size)
            ds = tuple(label(x, d) for x in derivs)
            basis = Primary(number) if kind == "argument" else label(basis_token, element.space_dim)
            factors.append(CanonicalFactor(kind, number, c, ds, basis))
        key = [encode_factor(f) for f in factors]
        new_order = [order[k] for k in sorted(range(len(order)), key=lambda k: key[k])]
        if new_order == order or key == previous:
            ranges = tuple(extents[Bound(k)] for k in range(len(labels)))
            return tuple(factors), ranges
        previous = key
        order = new_order


def lower(form):
    """Lower a :class:`~tensorform.forms.dsl.Form` to its canonical form."""
    if isinstance(form, dsl.Expr):
        raise FormError("integrand lacks the measure dx")
    if not isinstance(form, dsl.Form):
        raise FormError(f"cannot lower {type(form).__name__}")
    terms = form.terms()
    terminals = {}
    for t in terms:
        for f in t.factors:
            terminals[f.function.count] = f.function
    args = sorted((t for t in terminals.values() if t.kind == "argument"), key=lambda t: t.count)
    coefs = sorted((t for t in terminals.values() if t.kind == "coefficient"), key=lambda t: t.count)
    slot = {t.count: n for n, t in enumerate(args)}
    cnum = {t.count: n for n, t in enumerate(coefs)}
    dims = {t.element.dim for t in terminals.values()}
    if len(dims) > 1:
        raise FormError("form mixes elements on different cells")
    d = dims.pop() if dims else 0

    monomials = []
    for term in terms:
        term = _eliminate_deltas(term)
        if term is None or term.coefficient == 0.0:
            continue
        dsl.check_indices([term])
        seen = [f.function.count for f in term.factors if f.function.kind == "argument"]
        if sorted(seen) != sorted(slot):
            raise NotLowerable("not lowerable: form is not multilinear in its arguments")
        raw = []
        for f in term.factors:
            fn = f.function
            if fn.kind == "argument":
                raw.append(("argument", slot[fn.count], f.component, f.derivatives, fn.element, None))
            else:
                raw.append(("coefficient", cnum[fn.count], f.component, f.derivatives, fn.element, dsl.Index()))
        factors, ranges = _canonical_factors(raw, d)
        monomials.append(Monomial(term.coefficient, factors, ranges))
    monomials.sort(key=lambda m: json.dumps(m.structure()) + repr(m.coefficient))
    return CanonicalForm(len(args), tuple(a.element for a in args), tuple(c.element for c in coefs), tuple(monomials))


# ---------------------------------------------------------------------------
# pretty printing back to form-file text


def _argument_names(arity):
    if arity == 1:
        return ["v"]
    if arity == 2:
        return ["v", "U"]
    return [f"v{k}" for k in range(arity)]


def to_source(form, name="a"):
    """Render a canonical form as form-file text that lowers back to it."""
    elements = []
    for e in form.arguments + form.coefficients:
        if e not in elements:
            elements.append(e)
    enames = {e: f"element{n}" for n, e in enumerate(elements)}
    anames = _argument_names(form.arity)
    cnames = [f"w{k}" for k in range(len(form.coefficients))]
    nidx = max((len(m.ranges) for m in form.monomials), default=0)
    lines = [f"{enames[e]} = FiniteElement({e.family!r}, {e.cell!r}, {e.degree})" for e in elements]
    lines.append("")
    lines += [f"{anames[k]} = BasisFunction({enames[e]})" for k, e in enumerate(form.arguments)]
    lines += [f"{cnames[k]} = Function({enames[e]})" for k, e in enumerate(form.coefficients)]
    lines += [f"b{k} = Index()" for k in range(nidx)]
    lines.append("")

    def idx(x):
        return f"b{x.number}" if isinstance(x, Bound) else str(x)

    def factor(f):
        s = anames[f.number] if f.is_argument else cnames[f.number]
        if f.component is not None:
            s = f"{s}[{idx(f.component)}]"
        for x in f.derivatives:
            s = f"D({s}, {idx(x)})"
        return s

    parts = []
    for m in form.monomials:
        factors = [factor(f) for f in m.factors]
        parts.append("*".join([f"({m.coefficient!r})"] + factors))
    body = " + ".join(parts) if parts else "0.0"
    lines.append(f"{name} = ({body})*dx")
    return "\n".join(lines) + "\n"


__all__ = ["Bound", "Primary", "CanonicalFactor", "Monomial", "CanonicalForm", "lower", "signature", "to_source"]
