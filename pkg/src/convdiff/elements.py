"""
Nodal Lagrange reference elements and Gauss quadrature.

Reference cells are the interval [0, 1] and the triangle with vertices
(0,0), (1,0), (0,1). Basis functions are expanded in monomials; the
coefficients come from inverting the Vandermonde matrix at an equispaced
node lattice.

Local node layout (used by the DOF map):
    vertices first, in reference-vertex order;
    then edge nodes, edge by edge, each ordered from its first to its second vertex;
    then interior nodes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

INTERVAL = "interval"
TRIANGLE = "triangle"
MAX_DEGREE = 5
MAX_QUADRATURE_DEGREE = 12

# local edges of the reference triangle, as (first, second) vertex
TRIANGLE_EDGES = ((0, 1), (1, 2), (2, 0))


class UnsupportedDegreeError(ValueError):
    pass


class ReferenceDomainError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim)
    weights: np.ndarray  # (nq,)
    exactness_degree: int


@dataclass(frozen=True)
class ReferenceElement:
    cell_type: str
    degree: int
    nodes: np.ndarray  # (m, dim)
    exponents: np.ndarray  # (m, dim) monomial powers
    basis_coeffs: np.ndarray  # (m, m): basis_i = sum_k coeffs[k, i] * monomial_k
    vertex_nodes: tuple
    edge_nodes: tuple  # one tuple of local indices per edge
    interior_nodes: tuple

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_basis(self) -> int:
        return len(self.nodes)

    def tabulate(self, points, order: int = 1):
        """Evaluate basis functions (and derivatives) at reference points.

        Returns ``values`` of shape (npts, m); with ``order >= 1`` also
        ``grads`` (npts, m, dim); with ``order >= 2`` also ``hessians``
        (npts, m, dim, dim). No domain check is made here.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        C = self.basis_coeffs
        out = [_monomials(pts, self.exponents) @ C]
        if order >= 1:
            grads = np.stack(
                [_monomials(pts, self.exponents, _unit(d, self.dim)) @ C for d in range(self.dim)],
                axis=-1,
            )
            out.append(grads)
        if order >= 2:
            hess = np.empty(grads.shape + (self.dim,))
            for d1 in range(self.dim):
                for d2 in range(d1, self.dim):
                    h = _monomials(pts, self.exponents, _unit(d1, self.dim) + _unit(d2, self.dim)) @ C
                    hess[..., d1, d2] = h
                    hess[..., d2, d1] = h
            out.append(hess)
        return out[0] if order == 0 else tuple(out)


def _unit(d, dim):
    e = np.zeros(dim, dtype=int)
    e[d] = 1
    return e


def _monomials(pts, exponents, deriv=None):
    """Matrix M[q, k] = d^deriv (x^exponents[k]) evaluated at pts[q]."""
    npts, dim = pts.shape
    M = np.ones((npts, len(exponents)))
    if deriv is None:
        deriv = np.zeros(dim, dtype=int)
    for d in range(dim):
        e = exponents[:, d]
        r = deriv[d]
        # falling factorial e (e-1) ... (e-r+1)
        factor = np.ones(len(e))
        for s in range(r):
            factor = factor * (e - s)
        power = np.clip(e - r, 0, None)
        M *= factor * pts[:, d : d + 1] ** power
    return M


def _lattice(cell_type: str, p: int):
    if cell_type == INTERVAL:
        nodes = [(0.0,), (1.0,)] + [(k / p,) for k in range(1, p)]
        vertex_nodes = (0, 1)
        edge_nodes = ()
        interior = tuple(range(2, p + 1))
        return np.array(nodes), vertex_nodes, edge_nodes, interior

    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [tuple(v) for v in verts]
    edge_nodes = []
    for a, b in TRIANGLE_EDGES:
        idx = []
        for k in range(1, p):
            t = k / p
            nodes.append(tuple((1 - t) * verts[a] + t * verts[b]))
            idx.append(len(nodes) - 1)
        edge_nodes.append(tuple(idx))
    interior = []
    for j in range(1, p):
        for i in range(1, p - j):
            nodes.append((i / p, j / p))
            interior.append(len(nodes) - 1)
    return np.array(nodes), (0, 1, 2), tuple(edge_nodes), tuple(interior)


@functools.lru_cache(maxsize=None)
def reference_lagrange(cell_type: str, p: int) -> ReferenceElement:
    """Nodal Lagrange element of degree `p` on the reference interval or triangle."""
    if cell_type not in (INTERVAL, TRIANGLE):
        raise ValueError(f"unknown cell type {cell_type!r}")
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree must be in [1, {MAX_DEGREE}], got {p!r}")
    p = int(p)
    nodes, vertex_nodes, edge_nodes, interior = _lattice(cell_type, p)
    if cell_type == INTERVAL:
        exponents = np.arange(p + 1).reshape(-1, 1)
    else:
        exponents = np.array([(i, t - i) for t in range(p + 1) for i in range(t, -1, -1)])
    V = _monomials(nodes, exponents)
    if np.linalg.cond(V) > 1e12:
        raise RuntimeError(f"Vandermonde matrix for {cell_type} p={p} is numerically singular")
    coeffs = np.linalg.inv(V)
    for arr in (nodes, exponents, coeffs):
        arr.setflags(write=False)
    return ReferenceElement(cell_type, p, nodes, exponents, coeffs, vertex_nodes, edge_nodes, interior)


def eval_basis(elem: ReferenceElement, point, tol: float = 1e-12):
    """Values and gradients of every basis function at a single reference point."""
    pt = np.asarray(point, dtype=float).reshape(elem.dim)
    if elem.cell_type == INTERVAL:
        inside = -tol <= pt[0] <= 1 + tol
    else:
        inside = pt[0] >= -tol and pt[1] >= -tol and pt[0] + pt[1] <= 1 + tol
    if not inside:
        raise ReferenceDomainError(f"point {pt.tolist()} lies outside the reference {elem.cell_type}")
    values, grads = elem.tabulate(pt[None, :], order=1)
    return values[0], grads[0]


@functools.lru_cache(maxsize=None)
def quadrature(cell_type: str, required_degree: int) -> QuadratureRule:
    """Gauss rule exact for polynomials of total degree <= `required_degree`.

    Interval: Gauss-Legendre mapped to [0, 1]. Triangle: collapsed
    (Duffy) product of Gauss-Legendre and Gauss-Jacobi(1, 0) rules.
    """
    if required_degree > MAX_QUADRATURE_DEGREE:
        raise ValueError(f"quadrature degree {required_degree} exceeds {MAX_QUADRATURE_DEGREE}")
    d = max(int(required_degree), 0)
    npts = max(math.ceil((d + 1) / 2), 1)
    exactness = 2 * npts - 1
    gx, gw = np.polynomial.legendre.leggauss(npts)
    s = 0.5 * (gx + 1.0)
    ws = 0.5 * gw
    if cell_type == INTERVAL:
        return QuadratureRule(s.reshape(-1, 1), ws, exactness)
    if cell_type != TRIANGLE:
        raise ValueError(f"unknown cell type {cell_type!r}")
    # integral over t carries the (1 - t) Jacobian of the collapsed map
    jx, jw = roots_jacobi(npts, 1.0, 0.0)
    t = 0.5 * (jx + 1.0)
    wt = 0.25 * jw
    S, T = np.meshgrid(s, t, indexing="ij")
    WS, WT = np.meshgrid(ws, wt, indexing="ij")
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    return QuadratureRule(pts, (WS * WT).ravel(), exactness)
