"""Embedded expression language for multilinear forms.

Expressions are tensor valued.  Every node knows its value shape and can
``expand`` itself for a given tuple of component indices into a flat list of
:class:`Term` objects, i.e. scalar products of basis-function factors and
Kronecker deltas.  Compound operators (``grad``, ``dot``, ``div``, ...) are
implemented purely through ``expand`` with freshly created summation indices,
so everything reduces to the basic algebra of sums and products.
"""
import itertools
from dataclasses import dataclass, field, replace
from math import comb
from numbers import Number

from ..errors import FormError, NotLowerable
from ..fiat.elements import canonical_family
from ..fiat.reference import reference_cell

_counter = itertools.count()


@dataclass(frozen=True)
class ElementSpec:
    family: str
    cell: str
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        object.__setattr__(self, "cell", reference_cell(self.cell).shape)
        if self.degree < 0 or (self.degree == 0 and self.family != "Discontinuous Lagrange"):
            raise FormError(f"invalid degree {self.degree} for {self.family}")

    @property
    def dim(self):
        return reference_cell(self.cell).dim

    @property
    def value_size(self):
        return self.dim if self.family == "Vector Lagrange" else 1

    @property
    def value_shape(self):
        return (self.dim,) if self.family == "Vector Lagrange" else ()

    @property
    def space_dim(self):
        return self.value_size * comb(self.degree + self.dim, self.dim)

    def to_json(self):
        return {"family": self.family, "cell": self.cell, "degree": self.degree}

    def __str__(self):
        return f"FiniteElement({self.family!r}, {self.cell!r}, {self.degree})"


def FiniteElement(family, cell, degree):
    return ElementSpec(family, cell, degree)


def VectorElement(family, cell, degree):
    family = canonical_family(family)
    if family != "Lagrange":
        raise FormError(f"vector elements are only available for Lagrange, not {family}")
    return ElementSpec("Vector Lagrange", cell, degree)


class Index:
    """Free or summation index.  Identity is by object, not by name."""

    __slots__ = ("count", "name")

    def __init__(self, name=None):
        self.count = next(_counter)
        self.name = name

    def __repr__(self):
        return self.name or f"i{self.count}"


# ---------------------------------------------------------------------------
# expanded terms


@dataclass(frozen=True)
class Factor:
    function: "Terminal"
    component: object = None  # None, int or Index
    derivatives: tuple = ()

    def differentiate(self, direction):
        return replace(self, derivatives=self.derivatives + (direction,))


@dataclass(frozen=True)
class Delta:
    a: object
    b: object
    extent: int


@dataclass(frozen=True)
class Term:
    coefficient: float = 1.0
    factors: tuple = ()
    deltas: tuple = ()

    def __mul__(self, other):
        return Term(self.coefficient * other.coefficient, self.factors + other.factors, self.deltas + other.deltas)


def _multiply(left, right):
    return [a * b for a in left for b in right]


def _differentiate(terms, direction):
    out = []
    for t in terms:
        for n, f in enumerate(t.factors):
            factors = t.factors[:n] + (f.differentiate(direction),) + t.factors[n + 1:]
            out.append(replace(t, factors=factors))
    return out


def _fresh(n):
    return tuple(Index() for _ in range(n))


# ---------------------------------------------------------------------------
# expression nodes


class Expr:
    shape = ()

    @property
    def rank(self):
        return len(self.shape)

    def expand(self, components=()):
        if len(components) != self.rank:
            raise FormError(f"expected {self.rank} component indices, got {len(components)}")
        return self._expand(tuple(components))

    def _expand(self, components):
        raise NotImplementedError

    @property
    def cell_dim(self):
        dims = {t.element.dim for t in self.terminals()}
        if len(dims) > 1:
            raise FormError("expression mixes elements on different cells")
        return dims.pop() if dims else None

    def terminals(self):
        for child in self.children():
            yield from child.terminals()

    def children(self):
        return ()

    def __add__(self, other):
        return Sum(self, as_expr(other))

    def __radd__(self, other):
        return Sum(as_expr(other), self)

    def __sub__(self, other):
        return Sum(self, Product(Constant(-1.0), as_expr(other)))

    def __rsub__(self, other):
        return Sum(as_expr(other), Product(Constant(-1.0), self))

    def __neg__(self):
        return Product(Constant(-1.0), self)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Measure):
            return Form((self,))
        return Product(self, as_expr(other))

    def __rmul__(self, other):
        return Product(as_expr(other), self)

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Product(Constant(1.0 / other), self)
        return Division(self, other)

    def __rtruediv__(self, other):
        return Division(as_expr(other), self)

    def __abs__(self):
        return Abs(self)

    def __getitem__(self, key):
        key = key if isinstance(key, tuple) else (key,)
        return Indexed(self, key)

    def __len__(self):
        if not self.shape:
            raise FormError("len() of a scalar expression")
        return self.shape[0]

    def dx(self, direction):
        return Derivative(self, direction)


def as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, Number):
        return Constant(float(value))
    raise FormError(f"cannot use {type(value).__name__} in a form expression")


class Constant(Expr):
    def __init__(self, value):
        self.value = float(value)

    def _expand(self, components):
        return [Term(self.value)]

    def __repr__(self):
        return repr(self.value)


class Terminal(Expr):
    """A basis function (argument) or a fixed coefficient function."""

    kind = None

    def __init__(self, element, name=None):
        if not isinstance(element, ElementSpec):
            raise FormError(f"expected a finite element, got {element!r}")
        self.element = element
        self.count = next(_counter)
        self.name = name
        self.shape = element.value_shape

    def terminals(self):
        yield self

    def _expand(self, components):
        comp = components[0] if components else None
        return [Term(1.0, (Factor(self, comp),))]

    def __repr__(self):
        return self.name or f"{self.kind}{self.count}"


class BasisFunction(Terminal):
    kind = "argument"


class Function(Terminal):
    kind = "coefficient"


TestFunction = TrialFunction = BasisFunction


class IdentityMatrix(Expr):
    def __init__(self, n):
        self.n = int(n)
        self.shape = (self.n, self.n)

    def _expand(self, components):
        a, b = components
        return [Term(1.0, (), (Delta(a, b, self.n),))]


def Identity(n):
    return IdentityMatrix(n)


class Sum(Expr):
    def __init__(self, a, b):
        if a.shape != b.shape:
            raise FormError(f"incompatible value shapes {a.shape} and {b.shape} in sum")
        self.a, self.b = a, b
        self.shape = a.shape

    def children(self):
        return (self.a, self.b)

    def _expand(self, components):
        return self.a.expand(components) + self.b.expand(components)


class Product(Expr):
    """Product where at least one operand is scalar valued."""

    def __init__(self, a, b):
        if a.shape and b.shape:
            raise FormError(f"incompatible value shapes {a.shape} and {b.shape} in product; use dot or mult")
        self.a, self.b = a, b
        self.shape = a.shape or b.shape

    def children(self):
        return (self.a, self.b)

    def _expand(self, components):
        ca = components if self.a.shape else ()
        cb = components if self.b.shape else ()
        return _multiply(self.a.expand(ca), self.b.expand(cb))


class Division(Expr):
    def __init__(self, a, b):
        self.a, self.b = as_expr(a), as_expr(b)
        self.shape = self.a.shape

    def children(self):
        return (self.a, self.b)

    def _expand(self, components):
        raise NotLowerable("not lowerable: division by a function")


class Abs(Expr):
    def __init__(self, a):
        self.a = a
        self.shape = a.shape

    def children(self):
        return (self.a,)

    def _expand(self, components):
        raise NotLowerable("not lowerable: absolute value")


class Indexed(Expr):
    def __init__(self, a, key):
        if len(key) > a.rank:
            raise FormError(f"too many indices for an expression of shape {a.shape}")
        for k, extent in zip(key, a.shape):
            if isinstance(k, int) and not 0 <= k < extent:
                raise FormError(f"component {k} out of range for extent {extent}")
            if not isinstance(k, (int, Index)):
                raise FormError(f"invalid component index {k!r}")
        self.a, self.key = a, tuple(key)
        self.shape = a.shape[len(key):]

    def children(self):
        return (self.a,)

    def _expand(self, components):
        return self.a.expand(self.key + components)


class Derivative(Expr):
    """Partial derivative along one spatial direction (an Index or int)."""

    def __init__(self, a, direction):
        if not isinstance(direction, (int, Index)):
            raise FormError(f"invalid derivative direction {direction!r}")
        self.a, self.direction = as_expr(a), direction
        self.shape = self.a.shape

    def children(self):
        return (self.a,)

    def _expand(self, components):
        return _differentiate(self.a.expand(components), self.direction)


def D(a, direction):
    return Derivative(a, direction)


class Grad(Expr):
    def __init__(self, a):
        self.a = as_expr(a)
        d = self.a.cell_dim
        if d is None:
            raise FormError("gradient of an expression without basis functions")
        self.shape = self.a.shape + (d,)

    def children(self):
        return (self.a,)

    def _expand(self, components):
        return _differentiate(self.a.expand(components[:-1]), components[-1])


class Div(Expr):
    def __init__(self, a):
        self.a = as_expr(a)
        if not self.a.shape:
            raise FormError("incompatible value shapes: divergence of a scalar")
        self.shape = self.a.shape[:-1]

    def children(self):
        return (self.a,)

    def _expand(self, components):
        (k,) = _fresh(1)
        return _differentiate(self.a.expand(components + (k,)), k)


class Transpose(Expr):
    def __init__(self, a):
        self.a = as_expr(a)
        if self.a.rank != 2:
            raise FormError(f"incompatible value shapes: transpose of shape {self.a.shape}")
        self.shape = self.a.shape[::-1]

    def children(self):
        return (self.a,)

    def _expand(self, components):
        return self.a.expand(components[::-1])


class Inner(Expr):
    """Full contraction of two expressions of equal shape."""

    def __init__(self, a, b):
        self.a, self.b = as_expr(a), as_expr(b)
        if self.a.shape != self.b.shape:
            raise FormError(f"incompatible value shapes {self.a.shape} and {self.b.shape} in dot")

    def children(self):
        return (self.a, self.b)

    def _expand(self, components):
        ks = _fresh(self.a.rank)
        return _multiply(self.a.expand(ks), self.b.expand(ks))


class MatrixProduct(Expr):
    """Contraction of the last axis of ``a`` with the first axis of ``b``."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        if a.shape[-1] != b.shape[0]:
            raise FormError(f"incompatible value shapes {a.shape} and {b.shape} in mult")
        self.shape = a.shape[:-1] + b.shape[1:]

    def children(self):
        return (self.a, self.b)

    def _expand(self, components):
        (k,) = _fresh(1)
        na = self.a.rank - 1
        return _multiply(self.a.expand(components[:na] + (k,)), self.b.expand((k,) + components[na:]))


class Trace(Expr):
    def __init__(self, a):
        self.a = as_expr(a)
        if self.a.rank != 2 or self.a.shape[0] != self.a.shape[1]:
            raise FormError(f"incompatible value shapes: trace of shape {self.a.shape}")

    def children(self):
        return (self.a,)

    def _expand(self, components):
        (k,) = _fresh(1)
        return self.a.expand((k, k))


def grad(a):
    return Grad(a)


def div(a):
    return Div(a)


def transp(a):
    return Transpose(a)


def dot(a, b):
    a, b = as_expr(a), as_expr(b)
    if not a.shape and not b.shape:
        return Product(a, b)
    return Inner(a, b)


inner = dot


def mult(a, b):
    a, b = as_expr(a), as_expr(b)
    if not a.shape or not b.shape:
        return Product(a, b)
    return MatrixProduct(a, b)


def trace(a):
    return Trace(a)


# ---------------------------------------------------------------------------
# integrals


class Measure:
    """Cell-integral marker; ``expr * dx`` produces a :class:`Form`."""

    def __rmul__(self, other):
        return Form((as_expr(other),))

    def __repr__(self):
        return "dx"


dx = Measure()


@dataclass(frozen=True)
class Form:
    integrands: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for e in self.integrands:
            if e.shape:
                raise FormError(f"integrand must be scalar valued, got shape {e.shape}")
            check_indices(e.expand(()))

    def __add__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return Form(self.integrands + other.integrands)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return Form(tuple(Product(Constant(scalar), e) for e in self.integrands))

    def terms(self):
        out = []
        for e in self.integrands:
            out.extend(e.expand(()))
        return out


def _term_indices(term):
    for f in term.factors:
        yield f.component
        yield from f.derivatives
    for dl in term.deltas:
        yield dl.a
        yield dl.b


def check_indices(terms):
    """Enforce the summation convention: every index occurs exactly twice."""
    for t in terms:
        counts = {}
        for idx in _term_indices(t):
            if isinstance(idx, Index):
                counts[idx] = counts.get(idx, 0) + 1
        for idx, n in counts.items():
            if n == 1:
                raise FormError(f"index appears once: {idx!r} is neither fixed nor summed")
            if n > 2:
                raise FormError(f"index {idx!r} appears {n} times in one product")
