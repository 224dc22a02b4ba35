"""
Element Peclet numbers and the stabilization parameters used by assembly.

Modes:
    GALERKIN              no extra terms
    SUPG                  tau * (b . grad v, R(u_h)) per element, tau from the optimal xi(Pe)
    ARTIFICIAL_DIFFUSION  isotropic extra diffusion beta * |b| * h / 2
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np


class Mode(enum.Enum):
    GALERKIN = "galerkin"
    SUPG = "supg"
    ARTIFICIAL_DIFFUSION = "artdiff"


@dataclass(frozen=True)
class StabilizationConfig:
    mode: Mode = Mode.GALERKIN
    beta: float = 0.5

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")


def element_peclet(b_norm, eps, a, h):
    """Pe = |b| h / (2 eps a); works elementwise on arrays."""
    return np.asarray(b_norm) * np.asarray(h) / (2.0 * eps * a)


def _xi_taylor_coeffs(terms=12):
    # coth(x) - 1/x = sum_k 2^{2k} B_{2k} x^{2k-1} / (2k)!,  k >= 1
    # exact Bernoulli numbers; scipy.special.bernoulli is only good to ~1e-12
    B = [Fraction(1)]
    for m in range(1, 2 * terms + 1):
        B.append(-sum(math.comb(m + 1, j) * B[j] for j in range(m)) / (m + 1))
    return np.array([float(4**k * B[2 * k] / math.factorial(2 * k)) for k in range(1, terms + 1)])


_XI_TAYLOR = _xi_taylor_coeffs()


def xi_optimal(pe):
    """coth(Pe) - 1/Pe, with the series Pe/3 - Pe^3/45 below 1e-4.

    Between 1e-4 and 0.5 a longer Taylor expansion replaces the closed form,
    which loses about half the digits to cancellation there.
    """
    pe = np.asarray(pe, dtype=float)
    out = np.empty_like(pe)
    small = pe < 1e-4
    ps = pe[small]
    out[small] = ps / 3.0 - ps**3 / 45.0
    mid = ~small & (pe < 0.5)
    pm = pe[mid]
    out[mid] = pm * np.polyval(_XI_TAYLOR[::-1], pm * pm)
    large = ~small & ~mid
    pl = pe[large]
    # coth(x) = 1 + 2/(e^{2x} - 1); expm1 keeps this accurate and overflow-free
    with np.errstate(over="ignore"):
        out[large] = 1.0 + 2.0 / np.expm1(2.0 * pl) - 1.0 / pl
    return out if out.ndim else float(out)


def tau_supg(b_norm, eps, a, h):
    """tau = h / (2 |b|) * xi(Pe), and 0 where |b| = 0."""
    b_norm = np.asarray(b_norm, dtype=float)
    h = np.asarray(h, dtype=float)
    b_norm, h = np.broadcast_arrays(b_norm, h)
    tau = np.zeros(b_norm.shape)
    moving = b_norm > 0
    pe = element_peclet(b_norm[moving], eps, a, h[moving])
    tau[moving] = h[moving] / (2.0 * b_norm[moving]) * xi_optimal(pe)
    return tau if tau.ndim else float(tau)


def artificial_diffusion_increment(b_norm, h, beta):
    return beta * np.asarray(b_norm) * np.asarray(h) / 2.0
