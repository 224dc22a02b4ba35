"""
Problem description for  -eps div(a grad u) + b . grad u + c u = S  with
Dirichlet data on some sides and zero flux on the rest.

The 1D model  u'' - b u' = S  is the same operator with the source negated,
so the presets below store S = 0 and nothing changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .mesh import Marker

BoundaryValue = Union[float, Callable[[np.ndarray], np.ndarray]]

SIDES = {
    1: (Marker.LEFT, Marker.RIGHT),
    2: (Marker.LEFT, Marker.RIGHT, Marker.BOTTOM, Marker.TOP),
}


@dataclass(frozen=True)
class ProblemSpec:
    """Constant-coefficient convection-diffusion-reaction problem.

    ``source`` is None (S = 0), a float, or a callable taking an (npts, dim)
    coordinate array. ``dirichlet`` maps a side to a float or a callable of
    the same kind. ``point_values`` pins values at specific boundary
    vertices (used for corners where two sides disagree).
    """

    dim: int
    eps: float = 1.0
    a: float = 1.0
    b: tuple = (0.0,)
    c: float = 0.0
    source: object = None
    dirichlet: dict = field(default_factory=dict)
    neumann: frozenset = frozenset()
    point_values: dict = field(default_factory=dict)

    def __post_init__(self):
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        object.__setattr__(self, "b", b)
        if self.dim not in SIDES:
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(b) != self.dim:
            raise ValueError(f"convection vector has {len(b)} components for a {self.dim}D problem")
        for name in ("eps", "a", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not all(math.isfinite(v) for v in b):
            raise ValueError("convection vector must be finite")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.a < 1:
            raise ValueError(f"a must be >= 1, got {self.a}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if not self.dirichlet:
            raise ValueError("at least one side must carry Dirichlet data")
        sides = set(SIDES[self.dim])
        given = set(self.dirichlet) | set(self.neumann)
        if set(self.dirichlet) & set(self.neumann):
            raise ValueError("a side cannot be both Dirichlet and Neumann")
        if given != sides:
            raise ValueError(f"every side must be Dirichlet or Neumann; missing {sides - given}")

    @property
    def b_norm(self) -> float:
        return float(np.linalg.norm(self.b))

    def source_at(self, x: np.ndarray) -> np.ndarray:
        if self.source is None:
            return np.zeros(len(x))
        if callable(self.source):
            return np.asarray(self.source(x), dtype=float).reshape(len(x))
        return np.full(len(x), float(self.source))

    def boundary_value(self, marker: Marker, x: np.ndarray) -> np.ndarray:
        g = self.dirichlet[marker]
        if callable(g):
            return np.asarray(g(x), dtype=float).reshape(len(x))
        return np.full(len(x), float(g))


def paper_1d(b: float = 50.0, eps: float = 1.0) -> ProblemSpec:
    """u'' - b u' = 0 on [0, 1], u(0) = 1, u(1) = 0."""
    return ProblemSpec(dim=1, eps=eps, b=(b,), dirichlet={Marker.LEFT: 1.0, Marker.RIGHT: 0.0})


def paper_2d(b: float = 50.0, eps: float = 1.0) -> ProblemSpec:
    """Laplace(u) - b (u_x + u_y) = 0 on the unit square.

    u = 1 on the left and bottom sides, 0 on the right and top sides, and
    0.5 at the two corners (0, 1) and (1, 0) where the sides disagree.
    """
    return ProblemSpec(
        dim=2,
        eps=eps,
        b=(b, b),
        dirichlet={Marker.LEFT: 1.0, Marker.BOTTOM: 1.0, Marker.RIGHT: 0.0, Marker.TOP: 0.0},
        point_values={(0.0, 1.0): 0.5, (1.0, 0.0): 0.5},
    )
