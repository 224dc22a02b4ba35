"""
Structured meshes of the unit interval and the unit square.

Vertex coordinates are generated as i/n so that refinement never accumulates
drift, and the square is split along diagonals parallel to y = x which makes
the triangulation invariant under (x, y) -> (y, x).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Marker(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh of [0,1] or [0,1]^2.

    Attributes
    ----------
    dim : int
        1 or 2.
    vertices : ndarray, shape (nv, dim)
    cells : ndarray, shape (nc, dim + 1)
        Vertex indices; triangles are counterclockwise.
    boundary_facets : list of (tuple of int, Marker)
        Boundary points (1D) or boundary edges (2D) with the side they lie on.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: list
    vertex_markers: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)
        if not self.vertex_markers:
            markers: dict[int, set] = {}
            for verts, marker in self.boundary_facets:
                for v in verts:
                    markers.setdefault(v, set()).add(marker)
            object.__setattr__(
                self, "vertex_markers", {v: frozenset(m) for v, m in sorted(markers.items())}
            )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_measures(self) -> np.ndarray:
        """Length (1D) or signed area (2D) of every cell."""
        x = self.vertices[self.cells]
        if self.dim == 1:
            return x[:, 1, 0] - x[:, 0, 0]
        e1 = x[:, 1] - x[:, 0]
        e2 = x[:, 2] - x[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def cell_diameters(self) -> np.ndarray:
        """Cell length (1D) or longest edge (2D)."""
        if self.dim == 1:
            return np.abs(self.cell_measures())
        x = self.vertices[self.cells]
        lengths = [
            np.linalg.norm(x[:, j] - x[:, i], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))
        ]
        return np.max(lengths, axis=0)

    def edges(self) -> np.ndarray:
        """Unique edges of a triangulation as sorted vertex pairs, lexicographically ordered."""
        if self.dim != 2:
            raise ValueError("edges() is defined for triangulations only")
        c = self.cells
        pairs = np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)


def build_interval_mesh(n: int) -> Mesh:
    """Uniform mesh of [0, 1] with `n` cells."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"cell count must be an integer >= 1, got {n!r}")
    n = int(n)
    vertices = (np.arange(n + 1, dtype=float) / n).reshape(-1, 1)
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    facets = [((0,), Marker.LEFT), ((n,), Marker.RIGHT)]
    return Mesh(1, vertices, cells, facets)


def build_unit_square_mesh(n: int) -> Mesh:
    """Uniform triangulation of [0, 1]^2 with `n` squares per side, 2n^2 triangles."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"cells per side must be an integer >= 1, got {n!r}")
    n = int(n)
    idx = np.arange(n + 1)
    # vertex (i, j) sits at (i/n, j/n) with index j*(n+1) + i
    X, Y = np.meshgrid(idx / n, idx / n)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    def vid(a, b):
        return b * (n + 1) + a

    facets = []
    for k in range(n):
        facets.append(((vid(k, 0), vid(k + 1, 0)), Marker.BOTTOM))
    for k in range(n):
        facets.append(((vid(n, k), vid(n, k + 1)), Marker.RIGHT))
    for k in range(n):
        facets.append(((vid(k, n), vid(k + 1, n)), Marker.TOP))
    for k in range(n):
        facets.append(((vid(0, k), vid(0, k + 1)), Marker.LEFT))
    return Mesh(2, vertices, cells, facets)


def mesh_stats(mesh: Mesh) -> tuple[float, float, int, int]:
    """Return (h_min, h_max, cell_count, vertex_count)."""
    h = mesh.cell_diameters()
    return float(h.min()), float(h.max()), mesh.n_cells, mesh.n_vertices
