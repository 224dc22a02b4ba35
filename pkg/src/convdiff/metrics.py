"""
Error norms against a reference solution, oscillation indicators and
observed convergence rates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .assembly import Solution, cell_geometry
from .elements import MAX_QUADRATURE_DEGREE, quadrature
from .mesh import mesh_stats


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    """Errors of a discrete solution. ``linf`` is the max error over DOF points only."""

    l2: float
    linf: float
    h1_semi: float
    overshoot: float
    undershoot: float
    dof_count: int
    h_max: float

    def as_row(self) -> dict:
        return asdict(self)


def _fd_gradient(oracle, x, step=1e-6):
    grads = []
    for d in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[d] = step
        lo = np.clip(x - e, 0.0, 1.0)
        hi = np.clip(x + e, 0.0, 1.0)
        grads.append((oracle(hi) - oracle(lo)) / (hi[:, d] - lo[:, d]))
    return np.stack(grads, axis=-1)


def error_norms(
    solution: Solution,
    oracle,
    oracle_grad=None,
    data_min: float = 0.0,
    data_max: float = 1.0,
) -> ErrorReport:
    """L2, H1-seminorm and nodal max error of `solution` against `oracle`.

    `oracle` maps an (npts, dim) coordinate array to values; `oracle_grad`
    to (npts, dim) gradients (central differences of `oracle` when omitted).
    Integrals use a quadrature rule of degree 2p + 2 on every cell.
    """
    dm = solution.dofmap
    mesh = dm.mesh
    elem = dm.element
    rule = quadrature(elem.cell_type, min(2 * dm.degree + 2, MAX_QUADRATURE_DEGREE))
    phi, dphi = elem.tabulate(rule.points, order=1)
    x0, J, det, Jinv = cell_geometry(mesh)
    local = solution.values[dm.cell_dofs]  # (nc, m)
    uh = local @ phi.T  # (nc, nq)
    G = np.einsum("qik,ckj->cqij", dphi, Jinv)
    grad_uh = np.einsum("ci,cqij->cqj", local, G)

    xq = (x0[:, None, :] + np.einsum("cij,qj->cqi", J, rule.points)).reshape(-1, mesh.dim)
    u = np.asarray(oracle(xq), dtype=float).reshape(uh.shape)
    if oracle_grad is None:
        du = _fd_gradient(oracle, xq)
    else:
        du = np.asarray(oracle_grad(xq), dtype=float)
    du = du.reshape(grad_uh.shape)

    w = rule.weights[None, :] * np.abs(det)[:, None]
    l2 = float(np.sqrt(np.sum(w * (uh - u) ** 2)))
    h1 = float(np.sqrt(np.sum(w * np.sum((grad_uh - du) ** 2, axis=-1))))
    nodal = np.asarray(oracle(dm.coords), dtype=float).reshape(-1)
    linf = float(np.max(np.abs(solution.values - nodal)))
    over, under = oscillation_indicator(solution.values, data_min, data_max)
    _, h_max, _, _ = mesh_stats(mesh)
    return ErrorReport(l2, linf, h1, over, under, dm.n_dofs, h_max)


def oscillation_indicator(values, data_min: float = 0.0, data_max: float = 1.0):
    """(overshoot, undershoot) of the DOF values relative to [data_min, data_max]."""
    if data_min > data_max:
        raise ValueError("data_min must not exceed data_max")
    v = np.asarray(values, dtype=float)
    overshoot = max(0.0, float(v.max()) - data_max)
    undershoot = max(0.0, data_min - float(v.min()))
    return overshoot, undershoot


def convergence_rates(pairs) -> float:
    """Least-squares slope of log(error) against log(h)."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DegenerateInputError("at least two (h, error) pairs are needed")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise DegenerateInputError("mesh sizes must be positive and strictly decreasing")
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise DegenerateInputError("errors must be finite and positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)
