"""Local-to-global node numbering for Lagrange-type elements.

Global numbers are laid out entity dimension by entity dimension: all vertex
nodes, then ``k`` nodes per edge, then ``m`` per face, then the interior nodes
of each cell.  Nodes on a shared edge or face are stored in the order of the
entity's sorted global vertex tuple; each cell reaches them through an
orientation-dependent reordering table.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import MeshError
from .fiat.reference import reference_cell
from .forms.dsl import ElementSpec
from .mesh import FACE_PERMUTATIONS
from .tensorrep import basis_for


def _face_lattice(degree):
    """Barycentric integer triples (c0, c1, c2) of interior face nodes, in local order."""
    return [(degree - a - b, a, b) for b in range(1, degree) for a in range(1, degree - b)]


def edge_reordering(k):
    """Rows indexed by edge alignment: local position -> position in sorted order."""
    return ((tuple(range(k)), tuple(range(k - 1, -1, -1))) if k else ((), ()))


def face_reordering(degree):
    """Rows indexed by face alignment code: local position -> position in sorted order.

    A face seen by a cell as (w0, w1, w2) has code ``c`` with permutation
    ``pi = FACE_PERMUTATIONS[c]``, meaning the m-th smallest global vertex is
    ``w[pi[m]]``.  A node with local barycentric weights ``b`` therefore has
    weights ``(b[pi[0]], b[pi[1]], b[pi[2]])`` relative to the sorted face.
    """
    lattice = _face_lattice(degree)
    where = {p: n for n, p in enumerate(lattice)}
    return tuple(tuple(where[tuple(b[pi[m]] for m in range(3))] for b in lattice) for pi in FACE_PERMUTATIONS)


@dataclass(frozen=True)
class DofMapSpec:
    """Node layout of an element: nodes per entity and orientation tables."""

    element: ElementSpec
    entity_nodes: dict  # dim -> tuple of local node tuples per local entity
    nodes_per_entity: tuple  # count per topological dimension
    edge_reordering: tuple
    face_reordering: tuple
    discontinuous: bool
    value_size: int

    @property
    def local_dimension(self):
        return sum(len(n) for ents in self.entity_nodes.values() for n in ents) * self.value_size

    def global_dimension(self, mesh):
        if self.discontinuous:
            return mesh.num_cells * self.local_dimension
        counts = sum(k * mesh.num_entities(d) for d, k in enumerate(self.nodes_per_entity))
        return counts * self.value_size


def dofmap_spec(element):
    element = element if isinstance(element, ElementSpec) else ElementSpec(*element)
    basis = basis_for(element)
    scalar = basis.scalar if basis.value_size > 1 else basis
    entity_nodes = {d: tuple(tuple(n) for n in ents) for d, ents in scalar.nodes.entity_dofs.items()}
    cell = reference_cell(element.cell)
    per = tuple(len(entity_nodes[d][0]) if entity_nodes[d] else 0 for d in range(cell.dim + 1))
    q = element.degree
    disc = element.family == "Discontinuous Lagrange"
    return DofMapSpec(
        element,
        entity_nodes,
        per,
        edge_reordering(max(q - 1, 0)),
        face_reordering(q) if q >= 3 else tuple(() for _ in FACE_PERMUTATIONS),
        disc,
        element.value_size,
    )


def _scalar_dofmap(spec, mesh):
    d = mesh.dim
    nc = mesh.num_cells
    nloc = spec.local_dimension // spec.value_size
    if spec.discontinuous:
        return np.arange(nc * nloc, dtype=np.int64).reshape(nc, nloc)
    out = np.empty((nc, nloc), dtype=np.int64)
    offset = 0
    for dim in range(d + 1):
        k = spec.nodes_per_entity[dim]
        for e, local in enumerate(spec.entity_nodes[dim]):
            if not local:
                continue
            ids = mesh.cell_entities[dim][:, e]
            if dim == 0 or dim == d:
                reorder = np.broadcast_to(np.arange(k), (nc, k))
            elif dim == 1:
                reorder = np.array(spec.edge_reordering)[mesh.edge_alignment[:, e]]
            else:
                reorder = np.array(spec.face_reordering)[mesh.face_alignment[:, e]]
            out[:, list(local)] = offset + k * ids[:, None] + reorder
        offset += k * mesh.num_entities(dim)
    return out


@dataclass(frozen=True, eq=False)
class DofMap:
    spec: DofMapSpec
    cells: np.ndarray  # (nc, n0) global numbers
    size: int

    def __call__(self, cell):
        return self.cells[cell]


def generate_dofmap(element, mesh):
    """Global node numbers for every cell of ``mesh``; vector components are blocked per node."""
    spec = element if isinstance(element, DofMapSpec) else dofmap_spec(element)
    if reference_cell(spec.element.cell).dim != mesh.dim:
        raise MeshError(f"element lives on a {spec.element.cell} but the mesh has dimension {mesh.dim}")
    scalar = _scalar_dofmap(spec, mesh)
    ncomp = spec.value_size
    if ncomp == 1:
        cells = scalar
    else:
        # local vector node c*n + k  ->  global ncomp*scalar + c
        cells = np.concatenate([ncomp * scalar + c for c in range(ncomp)], axis=1)
    return DofMap(spec, cells, spec.global_dimension(mesh))


def dof_coordinates(dofmap, mesh):
    """Physical coordinate of every global node (vector components share coordinates)."""
    basis = basis_for(dofmap.spec.element)
    X = mesh.cell_vertices()
    ref = basis.nodes.points  # (n0, d) on the reference cell
    J = X[:, 1:, :] - X[:, :1, :]
    phys = X[:, :1, :] + np.einsum("nd,cde->cne", ref, J)
    coords = np.full((dofmap.size, mesh.dim), np.nan)
    coords[dofmap.cells.ravel()] = phys.reshape(-1, mesh.dim)
    return coords


def check_continuity(dofmap, mesh, tol=1e-12):
    """Largest disagreement between coordinates that different cells assign to one global node."""
    basis = basis_for(dofmap.spec.element)
    X = mesh.cell_vertices()
    J = X[:, 1:, :] - X[:, :1, :]
    phys = (X[:, :1, :] + np.einsum("nd,cde->cne", basis.nodes.points, J)).reshape(-1, mesh.dim)
    ids = dofmap.cells.ravel()
    first = np.full((dofmap.size, mesh.dim), np.nan)
    first[ids[::-1]] = phys[::-1]  # keep the first occurrence
    dev = np.abs(phys - first[ids]).max() if len(ids) else 0.0
    return float(dev)


# ---------------------------------------------------------------------------
# C++ emission


def _table(rows):
    return "{" + ", ".join("{" + ", ".join(str(x) for x in r) + "}" for r in rows) + "}"


def emit_nodemap(element, name="nodemap"):
    """C++ source of a ``nodemap`` function with the same numbering as :func:`generate_dofmap`."""
    spec = element if isinstance(element, DofMapSpec) else dofmap_spec(element)
    if spec.value_size != 1:
        raise NotImplementedError("code emission covers scalar elements; use generate_dofmap for vector spaces")
    cell = reference_cell(spec.element.cell)
    d = cell.dim
    lines = [f"void {name}(int nodes[], const Cell& cell, const Mesh& mesh)", "{"]
    if spec.discontinuous:
        n = spec.local_dimension
        lines += [f"  nodes[{t}] = {n}*cell.id() + {t};" for t in range(n)]
        return "\n".join(lines + ["}"]) + "\n"
    k, m = spec.nodes_per_entity[1] if d > 1 else 0, spec.nodes_per_entity[2] if d > 2 else 0
    if k > 1:
        lines.append(f"  static unsigned int edge_reordering[2][{k}] = {_table(spec.edge_reordering)};")
    if m > 1:
        lines.append(f"  static unsigned int face_reordering[6][{m}] = {_table(spec.face_reordering)};")
    counters = {0: "mesh.numVertices()", 1: "mesh.numEdges()", 2: "mesh.numFaces()"}
    getters = {0: "vertexID", 1: "edgeID", 2: "faceID"}
    have_offset = False
    for dim in range(d + 1):
        per = spec.nodes_per_entity[dim]
        if dim > 0 and per:
            prev = [(dd, spec.nodes_per_entity[dd]) for dd in range(dim) if spec.nodes_per_entity[dd]]
            if not have_offset:
                terms = [counters[dd] if kk == 1 else f"{kk}*{counters[dd]}" for dd, kk in prev]
                lines.append(f"  int offset = {' + '.join(terms)};")
                have_offset = True
            else:
                dd, kk = prev[-1]
                lines.append(f"  offset = offset + {counters[dd] if kk == 1 else f'{kk}*{counters[dd]}'};")
        for e, local in enumerate(spec.entity_nodes[dim]):
            if not local:
                continue
            if dim == 0:
                lines.append(f"  nodes[{local[0]}] = cell.vertexID({e});")
                continue
            if dim == d:
                for p, n in enumerate(local):
                    lines.append(f"  nodes[{n}] = offset + {per}*cell.id() + {p};" if per > 1 else f"  nodes[{n}] = offset + cell.id();")
                continue
            base = f"cell.{getters[dim]}({e})" if per == 1 else f"{per}*cell.{getters[dim]}({e})"
            if per == 1:
                lines.append(f"  nodes[{local[0]}] = offset + {base};")
                continue
            table = "edge_reordering" if dim == 1 else "face_reordering"
            lines.append(f"  alignment = cell.{'edgeAlignment' if dim == 1 else 'faceAlignment'}({e});")
            lines += [f"  nodes[{n}] = offset + {base} + {table}[alignment][{p}];" for p, n in enumerate(local)]
    body = "\n".join(lines[2:])
    if "alignment = " in body:
        lines.insert(2 + sum(1 for ln in lines[2:] if "static" in ln), "  int alignment = 0;")
    return "\n".join(lines + ["}"]) + "\n"


__all__ = [
    "DofMap",
    "DofMapSpec",
    "dofmap_spec",
    "generate_dofmap",
    "edge_reordering",
    "face_reordering",
    "check_continuity",
    "dof_coordinates",
    "emit_nodemap",
]
