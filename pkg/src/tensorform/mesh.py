"""Simplicial meshes with globally numbered edges and faces.

Edges and faces are identified by their sorted global vertex tuples and
numbered in lexicographic order of those tuples.  Each cell records, for its
local edges and faces, the global id and an orientation code relative to the
sorted convention:

* edge alignment is 0 when the local vertex order is increasing, else 1;
* face alignment is the index, in :data:`FACE_PERMUTATIONS`, of the tuple
  ``pi`` where ``pi[m]`` is the local position of the m-th smallest vertex.
"""
import logging
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import MeshError
from .fiat.reference import cell_for_dim

logger = logging.getLogger(__name__)

FACE_PERMUTATIONS = ((0, 1, 2), (0, 2, 1), (1, 2, 0), (1, 0, 2), (2, 0, 1), (2, 1, 0))


def face_alignment(local_vertices):
    """Orientation code of a face given its vertex ids in cell-local order."""
    order = tuple(int(k) for k in np.argsort(local_vertices, kind="stable"))
    return FACE_PERMUTATIONS.index(order)


@dataclass(eq=False)
class SimplicialMesh:
    vertices: np.ndarray  # (nv, d)
    cells: np.ndarray  # (nc, d+1)
    entities: dict  # dim -> (n_entities, dim+1) sorted vertex tuples
    cell_entities: dict  # dim -> (nc, n_local) global ids
    edge_alignment: np.ndarray  # (nc, n_local_edges)
    face_alignment: np.ndarray  # (nc, n_local_faces), empty unless d = 3

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def cell_type(self):
        return cell_for_dim(self.dim)

    def num_entities(self, dim):
        if dim == 0:
            return len(self.vertices)
        if dim == self.dim:
            return len(self.cells)
        return len(self.entities[dim])

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return self.num_entities(1)

    @property
    def num_faces(self):
        return self.num_entities(2)

    @property
    def num_cells(self):
        return len(self.cells)

    # per-cell queries mirroring a C++ cell interface
    def vertex_id(self, cell, local):
        return int(self.cells[cell, local])

    def edge_id(self, cell, local):
        return int(self.cell_entities[1][cell, local])

    def face_id(self, cell, local):
        return int(self.cell_entities[2][cell, local])

    def cell_vertices(self):
        """Coordinates of every cell, shape (nc, d+1, d)."""
        return self.vertices[self.cells]

    def volumes(self):
        V = self.cell_vertices()
        J = V[:, 1:, :] - V[:, :1, :]
        return np.abs(np.linalg.det(J)) / factorial(self.dim)

    def boundary_facets(self):
        """Indices of facets (entities of dimension d-1) owned by exactly one cell."""
        fd = self.dim - 1
        ids = self.cell_entities[fd].ravel()
        counts = np.bincount(ids, minlength=self.num_entities(fd))
        return np.flatnonzero(counts == 1)

    def boundary_vertices(self):
        fd = self.dim - 1
        facets = self.boundary_facets()
        if fd == 0:
            return np.unique(facets)
        return np.unique(self.entities[fd][facets])


def _number_entities(cells, dim, local_topology):
    """Global sorted tuples for the local entities of every cell."""
    local = np.array(local_topology)  # (n_local, dim+1)
    tuples = cells[:, local]  # (nc, n_local, dim+1)
    sorted_tuples = np.sort(tuples, axis=2)
    flat = sorted_tuples.reshape(-1, dim + 1)
    unique, inverse = np.unique(flat, axis=0, return_inverse=True)
    return unique, inverse.reshape(len(cells), len(local)), tuples


def build_mesh(vertices, cells):
    """Build a mesh, normalizing cell orientation so that every Jacobian has det > 0."""
    X = np.array(vertices, dtype=float)
    if X.ndim != 2 or X.shape[1] not in (1, 2, 3):
        raise MeshError("vertices must be an (nv, d) array with d in 1..3")
    d = X.shape[1]
    C = np.array(cells, dtype=np.int64).reshape(-1, d + 1)
    if C.size and (C.min() < 0 or C.max() >= len(X)):
        raise MeshError("cell references a vertex that does not exist")
    if len({tuple(sorted(c)) for c in C.tolist()}) != len(C):
        raise MeshError("duplicate cells")
    J = X[C[:, 1:]] - X[C[:, :1]]
    det = np.linalg.det(J)
    scale = np.abs(J).max(axis=(1, 2)) ** d if len(C) else np.zeros(0)
    if np.any(np.abs(det) <= 1e-14 * scale):
        raise MeshError("zero-volume cell")
    flip = det < 0
    if d == 1:
        C[flip] = C[flip][:, ::-1]
    else:
        C[flip, -2], C[flip, -1] = C[flip, -1], C[flip, -2].copy()
    used = np.zeros(len(X), dtype=bool)
    used[C.ravel()] = True
    if not used.all():
        logger.warning("mesh has %d vertices not used by any cell", int((~used).sum()))

    ref = cell_for_dim(d)
    entities, cell_entities = {}, {0: C.copy(), d: np.arange(len(C))[:, None]}
    edge_align = np.zeros((len(C), 0), dtype=np.int64)
    face_align = np.zeros((len(C), 0), dtype=np.int64)
    for k in range(1, d):
        uniq, ids, tuples = _number_entities(C, k, ref.topology[k])
        entities[k] = uniq
        cell_entities[k] = ids
        if k == 1:
            edge_align = (tuples[:, :, 0] > tuples[:, :, 1]).astype(np.int64)
        if k == 2:
            face_align = np.array([[face_alignment(t) for t in cell] for cell in tuples], dtype=np.int64)
    if d >= 1:
        entities[d] = np.sort(C, axis=1)
    if d == 2:
        face_align = np.array([[face_alignment(c)] for c in C], dtype=np.int64).reshape(len(C), 1)
    elif d == 1:
        edge_align = (C[:, :1] > C[:, 1:]).astype(np.int64)
    return SimplicialMesh(X, C, entities, cell_entities, edge_align, face_align)


def unit_square(n):
    """n x n squares on [0,1]^2, each split into two triangles along the diagonal."""
    xs = np.linspace(0.0, 1.0, n + 1)
    X = np.array([(x, y) for y in xs for x in xs])
    vid = lambda i, j: j * (n + 1) + i
    cells = []
    for j in range(n):
        for i in range(n):
            v0, v1, v2, v3 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            cells += [(v0, v1, v3), (v0, v3, v2)]
    return build_mesh(X, cells)


def unit_interval(n):
    X = np.linspace(0.0, 1.0, n + 1)[:, None]
    return build_mesh(X, [(k, k + 1) for k in range(n)])


def unit_cube(n, m=None, p=None, lengths=(1.0, 1.0, 1.0)):
    """Box [0,Lx]x[0,Ly]x[0,Lz] with n x m x p hexahedra, six tetrahedra each."""
    m = n if m is None else m
    p = n if p is None else p
    xs = [np.linspace(0.0, L, k + 1) for L, k in zip(lengths, (n, m, p))]
    X = np.array([(x, y, z) for z in xs[2] for y in xs[1] for x in xs[0]])
    vid = lambda i, j, k: (k * (m + 1) + j) * (n + 1) + i
    cells = []
    # Kuhn subdivision: every tet contains the main diagonal v000 -> v111
    paths = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    for k in range(p):
        for j in range(m):
            for i in range(n):
                for path in paths:
                    corner = [i, j, k]
                    tet = [vid(*corner)]
                    for axis in path:
                        corner[axis] += 1
                        tet.append(vid(*corner))
                    cells.append(tet)
    return build_mesh(X, cells)


def write_mesh(mesh, path):
    """Plain text: header "d nv nc", vertex coordinates, then 0-based cells."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mesh.dim} {mesh.num_vertices} {mesh.num_cells}\n")
        for x in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in x) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(int(v)) for v in c) + "\n")


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in (s.strip() for s in fh) if ln and not ln.startswith("#")]
    try:
        d, nv, nc = (int(x) for x in lines[0].split())
        X = np.array([[float(x) for x in ln.split()] for ln in lines[1:1 + nv]])
        C = np.array([[int(x) for x in ln.split()] for ln in lines[1 + nv:1 + nv + nc]])
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from None
    if X.shape != (nv, d) or C.shape != (nc, d + 1):
        raise MeshError(f"malformed mesh file {path}: header does not match contents")
    return build_mesh(X, C)
