"""
Global DOF numbering, sparse assembly of the weak form and Dirichlet elimination.

Weak form assembled on every cell K:

    (kappa grad u, grad v) + (b . grad u, v) + (c u, v) = (S, v)

with kappa = eps * a (+ the artificial-diffusion increment), plus in SUPG mode

    tau_K (b . grad v, -eps a lap u + b . grad u + c u - S).

Zero-flux sides need no boundary terms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import stabilization as stab_mod
from .elements import INTERVAL, TRIANGLE, MAX_QUADRATURE_DEGREE, quadrature, reference_lagrange
from .linsolve import CsrMatrix, solve
from .mesh import Mesh
from .problem import ProblemSpec
from .stabilization import Mode, StabilizationConfig


@dataclass(frozen=True)
class DofMap:
    """Continuous Lagrange DOF numbering: vertices, then edges, then cell interiors.

    ``dof_markers`` lists the boundary sides each DOF lies on (empty for
    interior DOFs). ``dirichlet_mask``/``dirichlet_values`` are filled when
    the map is built for a specific problem.
    """

    mesh: Mesh
    degree: int
    n_dofs: int
    cell_dofs: np.ndarray  # (nc, m)
    coords: np.ndarray  # (n_dofs, dim)
    dof_markers: tuple
    dirichlet_mask: np.ndarray | None = None
    dirichlet_values: np.ndarray | None = None

    @property
    def element(self):
        return reference_lagrange(INTERVAL if self.mesh.dim == 1 else TRIANGLE, self.degree)


@dataclass(frozen=True)
class LinearSystem:
    matrix: CsrMatrix
    rhs: np.ndarray
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray
    eliminated: bool = False


def cell_geometry(mesh: Mesh):
    """Affine maps x = x0 + J xi for every cell: returns (x0, J, detJ, Jinv)."""
    x = mesh.vertices[mesh.cells]
    x0 = x[:, 0, :]
    J = np.stack([x[:, k + 1, :] - x0 for k in range(mesh.dim)], axis=-1)
    if mesh.dim == 1:
        det = J[:, 0, 0]
        Jinv = 1.0 / J
    else:
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        Jinv = np.empty_like(J)
        Jinv[:, 0, 0] = J[:, 1, 1] / det
        Jinv[:, 1, 1] = J[:, 0, 0] / det
        Jinv[:, 0, 1] = -J[:, 0, 1] / det
        Jinv[:, 1, 0] = -J[:, 1, 0] / det
    return x0, J, det, Jinv


def build_dof_map(mesh: Mesh, p: int, problem: ProblemSpec | None = None) -> DofMap:
    """Number the DOFs of the degree-`p` Lagrange space on `mesh`.

    When `problem` is given, Dirichlet flags and values are attached.
    """
    elem = reference_lagrange(INTERVAL if mesh.dim == 1 else TRIANGLE, p)
    nv, nc = mesh.n_vertices, mesh.n_cells
    m = elem.n_basis
    cell_dofs = np.empty((nc, m), dtype=np.int64)
    cell_dofs[:, list(elem.vertex_nodes)] = mesh.cells
    markers = [frozenset()] * nv
    for v, ms in mesh.vertex_markers.items():
        markers[v] = ms
    coords = [mesh.vertices]

    if mesh.dim == 1:
        n_edge_dofs = 0
        offset = nv
    else:
        edges = mesh.edges()
        n_edge_dofs = (p - 1) * len(edges)
        keys = edges[:, 0] * nv + edges[:, 1]
        for local_edge, (la, lb) in enumerate(((0, 1), (1, 2), (2, 0))):
            ga, gb = mesh.cells[:, la], mesh.cells[:, lb]
            lo, hi = np.minimum(ga, gb), np.maximum(ga, gb)
            eid = np.searchsorted(keys, lo * nv + hi)
            k = np.arange(p - 1)
            forward = nv + eid[:, None] * (p - 1) + k[None, :]
            backward = forward[:, ::-1]
            local = list(elem.edge_nodes[local_edge])
            cell_dofs[:, local] = np.where((ga < gb)[:, None], forward, backward)
        if p > 1:
            t = np.arange(1, p) / p
            xa, xb = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
            edge_coords = xa[:, None, :] + t[None, :, None] * (xb - xa)[:, None, :]
            coords.append(edge_coords.reshape(-1, 2))
            facet_marker = {tuple(sorted(f)): mk for f, mk in mesh.boundary_facets}
            for e, (a, b) in enumerate(edges):
                mk = facet_marker.get((int(a), int(b)))
                markers.extend([frozenset([mk]) if mk else frozenset()] * (p - 1))
        offset = nv + n_edge_dofs

    interior = list(elem.interior_nodes)
    ni = len(interior)
    if ni:
        cell_dofs[:, interior] = offset + np.arange(nc * ni).reshape(nc, ni)
        x0, J, _, _ = cell_geometry(mesh)
        ref = elem.nodes[interior]
        phys = x0[:, None, :] + np.einsum("cij,qj->cqi", J, ref)
        coords.append(phys.reshape(-1, mesh.dim))
        markers.extend([frozenset()] * (nc * ni))

    coords = np.concatenate(coords)
    n_dofs = offset + nc * ni
    assert len(coords) == n_dofs == len(markers)
    dofmap = DofMap(mesh, int(p), int(n_dofs), cell_dofs, coords, tuple(markers))
    if problem is not None:
        dofmap = attach_dirichlet(dofmap, problem)
    return dofmap


def attach_dirichlet(dofmap: DofMap, problem: ProblemSpec) -> DofMap:
    """Resolve Dirichlet values per DOF.

    A DOF on one Dirichlet side takes that side's value. A DOF on two sides
    (a corner) takes an explicit ``point_values`` entry if one matches its
    coordinates, else the common value of the sides, else their mean.
    """
    if problem.dim != dofmap.mesh.dim:
        raise ValueError("problem and mesh dimensions differ")
    n = dofmap.n_dofs
    mask = np.zeros(n, dtype=bool)
    values = np.zeros(n)
    side_values = {}
    for marker in problem.dirichlet:
        idx = np.array([i for i, ms in enumerate(dofmap.dof_markers) if marker in ms], dtype=np.int64)
        if len(idx):
            side_values[marker] = dict(zip(idx.tolist(), problem.boundary_value(marker, dofmap.coords[idx])))
    for i, ms in enumerate(dofmap.dof_markers):
        vals = [side_values[mk][i] for mk in ms if mk in side_values]
        if not vals:
            continue
        mask[i] = True
        x = tuple(dofmap.coords[i])
        pinned = [v for pt, v in problem.point_values.items() if np.allclose(pt, x, rtol=0, atol=1e-12)]
        if pinned:
            values[i] = pinned[0]
        elif max(vals) - min(vals) <= 1e-14:
            values[i] = vals[0]
        else:
            values[i] = float(np.mean(vals))
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite Dirichlet value")
    mask.setflags(write=False)
    values.setflags(write=False)
    return replace(dofmap, dirichlet_mask=mask, dirichlet_values=values)


def _quadrature_degree(problem: ProblemSpec, p: int) -> int:
    polynomial_source = problem.source is None or not callable(problem.source)
    return min(2 * p if polynomial_source else 2 * p + 2, MAX_QUADRATURE_DEGREE)


def assemble(
    problem: ProblemSpec,
    mesh: Mesh,
    dofmap: DofMap,
    stab: StabilizationConfig = StabilizationConfig(),
    apply_bc: bool = True,
) -> LinearSystem:
    """Assemble the global system; with ``apply_bc`` Dirichlet DOFs are eliminated."""
    if dofmap.mesh is not mesh or dofmap.cell_dofs.shape[0] != mesh.n_cells:
        raise ValueError("dofmap was not built on this mesh")
    if problem.dim != mesh.dim:
        raise ValueError("problem and mesh dimensions differ")
    if dofmap.dirichlet_mask is None:
        dofmap = attach_dirichlet(dofmap, problem)

    elem = dofmap.element
    rule = quadrature(elem.cell_type, _quadrature_degree(problem, dofmap.degree))
    phi, dphi, d2phi = elem.tabulate(rule.points, order=2)
    x0, J, det, Jinv = cell_geometry(mesh)
    if np.any(det <= 0):
        raise ValueError("mesh contains cells with non-positive measure")
    wdet = rule.weights[None, :] * det[:, None]  # (nc, nq)
    G = np.einsum("qik,ckj->cqij", dphi, Jinv)  # physical gradients
    b = np.array(problem.b)
    bG = G @ b  # (nc, nq, m)

    h = mesh.cell_diameters()
    kappa = np.full(mesh.n_cells, problem.eps * problem.a)
    if stab.mode is Mode.ARTIFICIAL_DIFFUSION:
        kappa = kappa + stab_mod.artificial_diffusion_increment(problem.b_norm, h, stab.beta)

    K = np.einsum("c,cq,cqik,cqjk->cij", kappa, wdet, G, G)
    K += np.einsum("cq,qi,cqj->cij", wdet, phi, bG)
    if problem.c != 0.0:
        K += problem.c * np.einsum("cq,qi,qj->cij", wdet, phi, phi)

    has_source = problem.source is not None
    if has_source:
        xq = x0[:, None, :] + np.einsum("cij,qj->cqi", J, rule.points)
        S = problem.source_at(xq.reshape(-1, mesh.dim)).reshape(mesh.n_cells, -1)
        F = np.einsum("cq,cq,qi->ci", wdet, S, phi)
    else:
        F = np.zeros(K.shape[:2])

    if stab.mode is Mode.SUPG:
        tau = stab_mod.tau_supg(np.full(mesh.n_cells, problem.b_norm), problem.eps, problem.a, h)
        lap = np.einsum("qikl,cka,cla->cqi", d2phi, Jinv, Jinv)
        residual = -problem.eps * problem.a * lap + bG + problem.c * phi[None]
        K = K + np.einsum("c,cq,cqi,cqj->cij", tau, wdet, bG, residual)
        if has_source:
            F = F + np.einsum("c,cq,cq,cqi->ci", tau, wdet, S, bG)

    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(F))):
        raise ValueError("non-finite values in element matrices")

    cd = dofmap.cell_dofs
    m = cd.shape[1]
    rows = np.repeat(cd, m, axis=1).ravel()
    cols = np.tile(cd, (1, m)).ravel()
    A = CsrMatrix.from_coo(dofmap.n_dofs, rows, cols, K.ravel())
    rhs = np.bincount(cd.ravel(), weights=F.ravel(), minlength=dofmap.n_dofs)
    system = LinearSystem(A, rhs, dofmap.dirichlet_mask, dofmap.dirichlet_values)
    return apply_dirichlet(system, dofmap) if apply_bc else system


def apply_dirichlet(system: LinearSystem, dofmap: DofMap) -> LinearSystem:
    """Symmetric elimination: move constrained columns to the RHS, identity rows for constrained DOFs."""
    if system.eliminated:
        return system
    mask = dofmap.dirichlet_mask
    g = dofmap.dirichlet_values
    if mask is None:
        raise ValueError("dofmap carries no Dirichlet data")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite Dirichlet value")
    A = system.matrix
    r, c, v = A.row_of_entry(), A.column_indices, A.values
    moved = ~mask[r] & mask[c]
    rhs = system.rhs - np.bincount(r[moved], weights=v[moved] * g[c[moved]], minlength=A.n)
    rhs = np.where(mask, g, rhs)
    keep = ~mask[r] & ~mask[c]
    fixed = np.flatnonzero(mask)
    rows = np.concatenate([r[keep], fixed])
    cols = np.concatenate([c[keep], fixed])
    vals = np.concatenate([v[keep], np.ones(len(fixed))])
    return LinearSystem(CsrMatrix.from_coo(A.n, rows, cols, vals), rhs, mask, g, eliminated=True)


@dataclass(frozen=True)
class Solution:
    """Global DOF vector bound to its mesh and DOF map."""

    dofmap: DofMap
    values: np.ndarray

    @property
    def mesh(self) -> Mesh:
        return self.dofmap.mesh

    @property
    def degree(self) -> int:
        return self.dofmap.degree

    @property
    def coords(self) -> np.ndarray:
        return self.dofmap.coords

    def locate(self, points, tol: float = 1e-12):
        """Cell index and reference coordinates of each point (first matching cell)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.mesh.dim)
        x0, _, _, Jinv = cell_geometry(self.mesh)
        cells = np.full(len(pts), -1, dtype=np.int64)
        ref = np.zeros_like(pts)
        chunk = max(1, 2_000_000 // max(self.mesh.n_cells, 1))
        for s in range(0, len(pts), chunk):
            p = pts[s : s + chunk]
            xi = np.einsum("cij,pcj->pci", Jinv, p[:, None, :] - x0[None, :, :])
            if self.mesh.dim == 1:
                inside = (xi[..., 0] >= -tol) & (xi[..., 0] <= 1 + tol)
            else:
                inside = (xi[..., 0] >= -tol) & (xi[..., 1] >= -tol) & (xi.sum(-1) <= 1 + tol)
            found = inside.any(axis=1)
            first = np.argmax(inside, axis=1)
            cells[s : s + chunk] = np.where(found, first, -1)
            ref[s : s + chunk] = xi[np.arange(len(p)), first]
        if np.any(cells < 0):
            bad = pts[np.flatnonzero(cells < 0)[0]]
            raise ValueError(f"point {bad.tolist()} is outside the mesh")
        return cells, ref

    def evaluate(self, points) -> np.ndarray:
        cells, ref = self.locate(points)
        phi = self.dofmap.element.tabulate(ref, order=0)
        return np.einsum("pi,pi->p", phi, self.values[self.dofmap.cell_dofs[cells]])


def interpolate(dofmap: DofMap, f) -> np.ndarray:
    """Nodal interpolant of a callable f(coords) -> values."""
    return np.asarray(f(dofmap.coords), dtype=float).reshape(dofmap.n_dofs)


def solve_problem(
    problem: ProblemSpec,
    mesh: Mesh,
    degree: int,
    stab: StabilizationConfig = StabilizationConfig(),
    tol: float = 1e-10,
) -> Solution:
    """Assemble, eliminate boundary conditions and solve."""
    dofmap = build_dof_map(mesh, degree, problem)
    system = assemble(problem, mesh, dofmap, stab)
    u = solve(system.matrix, system.rhs, tol=tol)
    u[dofmap.dirichlet_mask] = dofmap.dirichlet_values[dofmap.dirichlet_mask]
    return Solution(dofmap, u)
