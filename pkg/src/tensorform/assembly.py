"""Global assembly: cell loop, scatter-add and boundary conditions.

Element tensors are computed for all cells in one batch and scattered into a
coordinate-format buffer that is compressed to CSR (duplicates summed).
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .artifact import CompiledForm, compile_form
from .dofmap import DofMap, generate_dofmap
from .errors import AssemblyError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class CoefficientFunction:
    """A finite element function given by its global coefficient vector."""

    dofmap: DofMap
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.dofmap.size,):
            raise AssemblyError(f"coefficient vector has length {self.values.shape}, expected ({self.dofmap.size},)")

    def restrict(self):
        """Local coefficients on every cell, shape (nc, n0)."""
        return self.values[self.dofmap.cells]


def interpolate(function, dofmap, mesh):
    """Nodal interpolant of ``function(x) -> value(s)`` evaluated at the dof coordinates."""
    from .dofmap import dof_coordinates

    coords = dof_coordinates(dofmap, mesh)
    ncomp = dofmap.spec.value_size
    vals = np.asarray(function(coords), dtype=float)
    if ncomp == 1:
        return CoefficientFunction(dofmap, vals.reshape(-1))
    vals = vals.reshape(len(coords), ncomp)
    comp = np.arange(dofmap.size) % ncomp
    return CoefficientFunction(dofmap, vals[np.arange(dofmap.size), comp])


def _as_compiled(kernel):
    if isinstance(kernel, CompiledForm):
        return kernel
    return compile_form(kernel)


def _local_coefficients(compiled, coefficients, mesh):
    want = compiled.form.coefficients
    if len(coefficients) != len(want):
        raise AssemblyError(f"form needs {len(want)} coefficient(s), got {len(coefficients)}")
    out = []
    for n, (w, spec) in enumerate(zip(coefficients, want)):
        if isinstance(w, CoefficientFunction):
            if w.dofmap.spec.element != spec:
                raise AssemblyError(f"coefficient {n} lives in {w.dofmap.spec.element}, form expects {spec}")
            out.append(w.restrict())
        else:
            w = np.asarray(w, dtype=float)
            if w.ndim != 2 or w.shape != (mesh.num_cells, spec.space_dim):
                raise AssemblyError(f"coefficient {n}: expected a CoefficientFunction or an (nc, {spec.space_dim}) array")
            out.append(w)
    return out


def assemble(kernel, mesh, dofmaps=None, coefficients=(), mode="tensor", chunk=20000):
    """Assemble a compiled form (or form) into a CSR matrix (arity 2) or a vector (arity 1).

    ``dofmaps`` gives one map per argument and defaults to maps generated
    from the form's elements.  ``mode`` selects how element tensors are
    evaluated: ``tensor`` (reference contraction), ``quadrature`` or
    ``schedule`` (optimized straight-line evaluation).
    """
    compiled = _as_compiled(kernel)
    r = compiled.arity
    if r not in (1, 2):
        raise AssemblyError(f"assembly supports arity 1 or 2, got {r}")
    if dofmaps is None:
        dofmaps = [generate_dofmap(e, mesh) for e in compiled.form.arguments]
    if len(dofmaps) != r:
        raise AssemblyError(f"expected {r} dofmap(s), got {len(dofmaps)}")
    for k, (dm, e) in enumerate(zip(dofmaps, compiled.form.arguments)):
        if dm.cells.shape != (mesh.num_cells, e.space_dim):
            raise AssemblyError(f"dofmap {k} has shape {dm.cells.shape}, expected ({mesh.num_cells}, {e.space_dim})")
    local = _local_coefficients(compiled, coefficients, mesh)
    X = mesh.cell_vertices()
    nc = mesh.num_cells

    if r == 1:
        out = np.zeros(dofmaps[0].size)
    else:
        rows_all, cols_all, vals_all = [], [], []
    for start in range(0, nc, chunk):
        sl = slice(start, min(start + chunk, nc))
        AK = compiled.element_tensors(X[sl], [w[sl] for w in local], mode=mode)
        if r == 1:
            np.add.at(out, dofmaps[0].cells[sl], AK)
        else:
            rows = dofmaps[0].cells[sl]
            cols = dofmaps[1].cells[sl]
            rows_all.append(np.broadcast_to(rows[:, :, None], AK.shape).ravel())
            cols_all.append(np.broadcast_to(cols[:, None, :], AK.shape).ravel())
            vals_all.append(AK.ravel())
    if r == 1:
        return out
    rows = np.concatenate(rows_all) if rows_all else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols_all) if cols_all else np.zeros(0, dtype=np.int64)
    shape = (dofmaps[0].size, dofmaps[1].size)
    if rows.size and (rows.max() >= shape[0] or cols.max() >= shape[1] or min(rows.min(), cols.min()) < 0):
        raise AssemblyError("internal error: dof index out of range")
    A = sp.coo_matrix((np.concatenate(vals_all) if vals_all else np.zeros(0), (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def assemble_action(kernel, mesh, U, dofmaps=None, coefficients=(), mode="tensor"):
    """Assemble a linear form whose last coefficient is the fixed function ``U``."""
    if U is None:
        raise AssemblyError("missing coefficient vector for the action")
    return assemble(kernel, mesh, dofmaps, tuple(coefficients) + (U,), mode=mode)


def boundary_dofs(dofmap, mesh, predicate=None):
    """Global dofs located on the boundary, optionally filtered by ``predicate(x) -> bool``."""
    from .dofmap import dof_coordinates

    if dofmap.spec.discontinuous:
        return np.zeros(0, dtype=np.int64)
    coords = dof_coordinates(dofmap, mesh)
    spec = dofmap.spec
    fd = mesh.dim - 1
    facets = set(mesh.boundary_facets().tolist())
    # local nodes on each local facet: vertices and closure entities of the facet
    ref = mesh.cell_type
    local_facet_nodes = []
    for f, verts in enumerate(ref.topology[fd]):
        verts = set(verts)
        nodes = []
        for dim, ents in ref.topology.items():
            if dim > fd:
                continue
            for e, ev in enumerate(ents):
                if set(ev) <= verts:
                    nodes += list(spec.entity_nodes[dim][e])
        local_facet_nodes.append(nodes)
    n = spec.local_dimension // spec.value_size
    selected = set()
    for f in range(len(ref.topology[fd])):
        cells = np.flatnonzero([fid in facets for fid in mesh.cell_entities[fd][:, f]])
        for c in range(spec.value_size):
            idx = [c * n + k for k in local_facet_nodes[f]]
            selected.update(dofmap.cells[np.ix_(cells, idx)].ravel().tolist())
    dofs = np.array(sorted(selected), dtype=np.int64)
    if predicate is not None and len(dofs):
        keep = np.array([bool(predicate(x)) for x in coords[dofs]], dtype=bool)
        dofs = dofs[keep]
    return dofs


def apply_dirichlet(A, b, dofs, values=0.0, symmetric=True):
    """Impose ``u[dofs] = values`` by identity rows; optionally eliminate the columns too."""
    A = sp.csr_matrix(A, copy=True)
    b = np.array(b, dtype=float, copy=True)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise AssemblyError(f"system dimensions disagree: A {A.shape}, b {b.shape}")
    dofs = np.unique(np.asarray(dofs, dtype=np.int64))
    if dofs.size == 0:
        logger.warning("Dirichlet condition selects no dofs")
        return A, b
    vals = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    mask = np.zeros(A.shape[0], dtype=bool)
    mask[dofs] = True
    if symmetric:
        u = np.zeros(A.shape[0])
        u[dofs] = vals
        b -= A @ u
        keep_cols = sp.diags((~mask).astype(float))
        A = (A @ keep_cols).tocsr()
    keep_rows = sp.diags((~mask).astype(float))
    A = (keep_rows @ A + sp.diags(mask.astype(float))).tocsr()
    A.eliminate_zeros()
    b[dofs] = vals
    return A, b


def write_matrix_market(A, path):
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(A))


def write_vector(x, path):
    np.savetxt(path, np.asarray(x, dtype=float), fmt="%.17g")

