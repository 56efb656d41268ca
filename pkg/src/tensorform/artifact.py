"""Compiled-form bundles: serialization, verification and the signature cache.

A bundle is a JSON document holding the canonical form, its signature, the
reference tensors (as exact rationals when available), the geometry plan and
optionally an evaluation schedule.  Bundles are written with sorted keys so
that compiling the same form twice yields byte-identical files.
"""
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArtifactError, SymmetryAssertionFailed
from .forms import dsl
from .forms.lowering import CanonicalForm, Monomial, lower
from .optimize import emit_schedule, flatten_and_reduce, minimum_spanning_tree, schedule_from_json, verify_schedule
from .tensorrep import (
    GeometryTerm,
    ReferenceTensor,
    ReferenceTerm,
    SecondaryAxis,
    compute_reference_tensor,
    element_tensor_quadrature,
    element_tensors,
    cell_geometry,
    evaluate_geometry,
    flop_count,
    quadrature_representation,
    to_latex,
)

logger = logging.getLogger(__name__)

FORMAT = "tensorform-bundle/1"


@dataclass(eq=False)
class CompiledForm:
    form: CanonicalForm
    reference: ReferenceTensor
    schedule: object = None  # EvaluationSchedule or None
    symmetry: tuple = (False, False)  # (output, geometry) folding used by the schedule
    verification: dict = None

    @property
    def signature(self):
        return self.form.signature

    @property
    def arity(self):
        return self.form.arity

    def element_tensors(self, vertices, coefficients=(), mode="tensor"):
        """A^K for a batch of cells (nc, d+1, d) in the requested evaluation mode."""
        geom = cell_geometry(vertices)
        if mode == "tensor":
            return element_tensors(self.reference, geom, coefficients)
        if mode == "quadrature":
            reps = self._quadrature()
            return element_tensor_quadrature(self.reference.form, geom, coefficients, representation=reps)
        if mode == "schedule":
            if self.schedule is None:
                raise ArtifactError("no schedule in artifact (compile with --optimize)")
            g = evaluate_geometry(self.reference.plan(), geom, coefficients)
            g = np.concatenate([np.reshape(G, (geom.num_cells, -1)) for G in g], axis=1)
            return self.schedule.evaluate(g)
        raise ValueError(f"unknown evaluation mode {mode!r}")

    def _quadrature(self):
        if not hasattr(self, "_qrep"):
            self._qrep = quadrature_representation(self.reference.form, group=False)
        return self._qrep

    def operation_counts(self):
        return flop_count(self.reference, self.schedule)

    def latex(self):
        return to_latex(self.reference)

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        data = {
            "format": FORMAT,
            "version": __version__,
            "signature": self.signature,
            "form": self.form.encode(),
            "terms": [_encode_term(t) for t in self.reference.terms],
            "schedule": None,
        }
        if self.schedule is not None:
            data["schedule"] = {
                "symmetric_output": self.symmetry[0],
                "symmetric_geometry": self.symmetry[1],
                **self.schedule.to_json(),
                "verification": self.verification,
            }
        return data

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=1) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def _encode_term(t):
    if t.exact is not None:
        values = {"exact": [str(v) for v in t.exact.ravel()]}
    else:
        values = {"float": [repr(float(v)) for v in t.A0.ravel()]}
    return {
        "shape": list(t.A0.shape),
        **values,
        "primary_dims": list(t.primary_dims),
        "secondary": [[a.kind, a.extent, a.origin] for a in t.secondary],
        "geometry": t.geometry.to_json(),
        "monomial": t.monomial.encode() if t.monomial is not None else None,
        "quadrature_degree": t.quadrature_degree,
    }


def _decode_term(data):
    shape = tuple(data["shape"])
    if "exact" in data:
        exact = np.array([Fraction(v) for v in data["exact"]], dtype=object).reshape(shape)
        A0 = exact.astype(float)
    else:
        exact = None
        A0 = np.array([float(v) for v in data["float"]]).reshape(shape)
    return ReferenceTerm(
        A0,
        exact,
        tuple(data["primary_dims"]),
        tuple(SecondaryAxis(*a) for a in data["secondary"]),
        GeometryTerm.from_json(data["geometry"]),
        Monomial.decode(data["monomial"]) if data["monomial"] is not None else None,
        data["quadrature_degree"],
    )


def from_dict(data):
    if data.get("format") != FORMAT:
        raise ArtifactError(f"not a tensorform bundle (format {data.get('format')!r})")
    form = CanonicalForm.decode(data["form"])
    if form.signature != data["signature"]:
        raise ArtifactError("signature mismatch: bundle contents do not match the stored signature")
    ref = ReferenceTensor(form.grouped(), [_decode_term(t) for t in data["terms"]])
    compiled = CompiledForm(form, ref)
    sched = data.get("schedule")
    if sched:
        symmetry = (sched["symmetric_output"], sched["symmetric_geometry"])
        vectors = flatten_and_reduce(ref, *symmetry)
        compiled.schedule = schedule_from_json(vectors, sched)
        compiled.symmetry = symmetry
        compiled.verification = sched.get("verification")
    return compiled


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupt bundle: {exc}") from None
    try:
        return from_dict(data)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ArtifactError(f"corrupt bundle: {type(exc).__name__}: {exc}") from None


def load(path):
    return loads(Path(path).read_text(encoding="utf-8"))


def atomic_write(path, text):
    """Write via a temporary file in the target directory and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save(compiled, path):
    atomic_write(path, compiled.to_json())


# ---------------------------------------------------------------------------
# compilation


def _build_schedule(ref):
    """Try the strongest symmetry folding first; fall back when a claim fails."""
    sym_out = ref.arity == 2 and len(set(ref.form.arguments)) == 1
    attempts = [(o, g) for o in ((True, False) if sym_out else (False,)) for g in (True, False)]
    for output, geometry in attempts:
        try:
            vectors = flatten_and_reduce(ref, output, geometry)
        except SymmetryAssertionFailed:
            continue
        return emit_schedule(vectors, minimum_spanning_tree(vectors)), (output, geometry)
    raise AssertionError("unreachable: the unfolded attempt cannot fail")


def compile_form(form, optimize=False, verify_trials=100):
    """Lower (if needed) and compile a form; with ``optimize`` also build and verify a schedule."""
    canonical = lower(form) if isinstance(form, dsl.Form) else form
    ref = compute_reference_tensor(canonical)
    compiled = CompiledForm(canonical, ref)
    if optimize and ref.terms:
        compiled.schedule, compiled.symmetry = _build_schedule(ref)
        compiled.verification = verify_schedule(compiled.schedule, ref, trials=verify_trials)
    return compiled


# ---------------------------------------------------------------------------
# signature cache


def cache_dir(override=None):
    if override:
        return Path(override)
    env = os.environ.get("TENSORFORM_CACHE_DIR")
    if env:
        return Path(env)
    root = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(root) / "tensorform"


def cache_path(signature, optimized, directory=None):
    suffix = "-opt" if optimized else ""
    return cache_dir(directory) / f"{signature}{suffix}.json"


def compile_cached(form, optimize=False, directory=None, use_cache=True):
    """Compile through the cache.  Returns ``(compiled, hit)``.

    Entries are keyed by signature alone, so cosmetic edits to a form file
    still hit.  A corrupt entry is recomputed and replaced with a warning.
    """
    canonical = lower(form) if isinstance(form, dsl.Form) else form
    path = cache_path(canonical.signature, optimize, directory)
    if use_cache and path.exists():
        try:
            compiled = load(path)
            if compiled.signature == canonical.signature and (compiled.schedule is not None) == bool(optimize):
                return compiled, True
            logger.warning("cache entry %s does not match; recompiling", path)
        except ArtifactError as exc:
            logger.warning("cache entry %s is unreadable (%s); recompiling", path, exc)
    compiled = compile_form(canonical, optimize=optimize)
    if use_cache:
        save(compiled, path)
    return compiled, False
