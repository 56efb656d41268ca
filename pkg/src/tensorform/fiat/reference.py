"""Reference simplices.

Vertices follow the usual unit-simplex convention (origin first, then the
unit vectors).  Sub-entities are numbered so that entity ``i`` of dimension
``d - 1`` is the one opposite vertex ``i``; edges of the tetrahedron follow
the same ordering used by FIAT/UFC::

    triangle edges:     (1,2) (0,2) (0,1)
    tetrahedron edges:  (2,3) (1,3) (1,2) (0,3) (0,2) (0,1)
    tetrahedron faces:  (1,2,3) (0,2,3) (0,1,3) (0,1,2)
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from ..errors import UnsupportedCell

SHAPES = ("interval", "triangle", "tetrahedron")

_TOPOLOGY = {
    "interval": {
        0: ((0,), (1,)),
        1: ((0, 1),),
    },
    "triangle": {
        0: ((0,), (1,), (2,)),
        1: ((1, 2), (0, 2), (0, 1)),
        2: ((0, 1, 2),),
    },
    "tetrahedron": {
        0: ((0,), (1,), (2,), (3,)),
        1: ((2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1)),
        2: ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
        3: ((0, 1, 2, 3),),
    },
}


@dataclass(frozen=True)
class ReferenceCell:
    shape: str
    dim: int
    vertices: tuple
    topology: dict

    @property
    def volume(self):
        return 1.0 / factorial(self.dim)

    def num_entities(self, dim):
        return len(self.topology[dim])

    def entity_vertices(self, dim, entity):
        return np.array([self.vertices[v] for v in self.topology[dim][entity]])

    def __hash__(self):
        return hash(self.shape)

    def __eq__(self, other):
        return isinstance(other, ReferenceCell) and other.shape == self.shape


@lru_cache(maxsize=None)
def reference_cell(shape):
    """Return the reference cell named ``shape``."""
    if isinstance(shape, ReferenceCell):
        return shape
    if shape not in _TOPOLOGY:
        raise UnsupportedCell(f"unsupported cell: {shape!r}")
    dim = SHAPES.index(shape) + 1
    verts = [tuple(0.0 for _ in range(dim))]
    for k in range(dim):
        verts.append(tuple(1.0 if j == k else 0.0 for j in range(dim)))
    return ReferenceCell(shape, dim, tuple(verts), _TOPOLOGY[shape])


def cell_for_dim(dim):
    if dim not in (1, 2, 3):
        raise UnsupportedCell(f"unsupported cell dimension: {dim}")
    return reference_cell(SHAPES[dim - 1])
