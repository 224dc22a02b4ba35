"""
Closed-form reference solutions.

1D:  u'' - b u' = 0 on [0, 1], u(0) = 1, u(1) = 0
     u(x) = (e^{bx} - e^b) / (1 - e^b)

2D:  lap(u) - b (u_x + u_y) = 0 on the unit square, u = 1 on x = 0 and y = 0,
     u = 0 on x = 1 and y = 1. Separation of variables gives

     u = e^{b(x+y)/2} sum_n C_n [sin(n pi x) R_n(y) + sin(n pi y) R_n(x)]

     C_n = 8 n pi (1 - (-1)^n e^{-b/2}) / (b^2 + 4 n^2 pi^2)
     R_n(t) = sinh(mu_n (1 - t)) / sinh(mu_n),   mu_n = sqrt(2 b^2 + 4 n^2 pi^2) / 2

Evaluation ("split", the default). C_n = F_n - (-1)^n e^{-b/2} F_n with
F_n = 8 n pi / (b^2 + 4 n^2 pi^2). The F_n part of the series sums exactly to
g(x) g(y), g being the 1D solution, so

     u = g(x) g(y) + sum_n (-1)^{n+1} F_n e^{b(x+y-1)/2} [sin(n pi x) R_n(y) + (x <-> y)]

Every exponent in the remaining sum is <= 0, so nothing large is formed and
nothing cancels. Near y = 0 (or x = 0) the sine series decays only like
1/n; there the asymptotic part (2 / n pi) e^{-n pi y} is subtracted term by
term and added back through its closed form (an arctangent). For b < 0 the
reflection u_b(x, y) = 1 - u_{-b}(1 - x, 1 - y) is used.

The "direct" method sums the series above term by term, each term in
combined-exponent form; it is kept as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# below this distance from an inflow side the 1/n tail is summed in closed form
_TAIL_CUTOFF = 0.05
_STREAK = 5
_POINT_CHUNK = 4096


class OracleDomainError(ValueError):
    pass


class TruncationError(RuntimeError):
    def __init__(self, message, last_term):
        super().__init__(message)
        self.last_term = last_term


@dataclass(frozen=True)
class SeriesParams:
    b: float
    tol: float = 1e-10
    n_max: int = 20000
    method: str = "split"

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise ValueError("b must be finite")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.method not in ("split", "direct"):
            raise ValueError(f"unknown method {self.method!r}")


def _check_unit(*arrays, tol=1e-12):
    for a in arrays:
        if np.any(~np.isfinite(a)) or np.any(a < -tol) or np.any(a > 1 + tol):
            raise OracleDomainError("evaluation point outside the unit interval/square")


def exact_1d(x, b: float):
    """u(x) = (e^{bx} - e^b)/(1 - e^b), evaluated without overflow; 1 - x as b -> 0."""
    if abs(b) > 700:
        raise ValueError(f"|b| = {abs(b)} exceeds 700")
    xa = np.asarray(x, dtype=float)
    _check_unit(xa)
    xa = np.clip(xa, 0.0, 1.0)
    if abs(b) < 1e-8:
        u = 1.0 - xa
    elif b > 0:
        u = np.expm1(-b * (1.0 - xa)) / np.expm1(-b)
    else:
        u = 1.0 - np.expm1(b * xa) / np.expm1(b)
    return u if u.ndim else float(u)


def exact_1d_derivative(x, b: float):
    xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if abs(b) < 1e-8:
        du = -np.ones_like(xa)
    elif b > 0:
        du = b * np.exp(-b * (1.0 - xa)) / np.expm1(-b)
    else:
        du = -b * np.exp(b * xa) / np.expm1(b)
    return du if du.ndim else float(du)


def series_coefficient(n, b: float):
    """C_n = 8 n pi (1 - (-1)^n e^{-b/2}) / (b^2 + 4 n^2 pi^2)."""
    n = np.asarray(n)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    c = 8.0 * n * np.pi * (1.0 - sign * np.exp(-b / 2.0)) / (b * b + 4.0 * n * n * np.pi**2)
    return c if c.ndim else float(c)


def _sinpi(z):
    r = np.remainder(z, 2.0)
    return np.where(r == np.floor(r), 0.0, np.sin(np.pi * r))


def _g(t, b):
    if abs(b) < 1e-8:
        return 1.0 - t
    return np.expm1(-b * (1.0 - t)) / np.expm1(-b)


def _log_sinh_ratio(mu, t):
    """log( sinh(mu (1 - t)) / sinh(mu) ) + mu t, i.e. log of (1 - e^{-2mu(1-t)})/(1 - e^{-2mu})."""
    with np.errstate(divide="ignore"):
        return np.log1p(-np.exp(-2.0 * mu * (1.0 - t))) - np.log1p(-np.exp(-2.0 * mu))


class _SplitTerms:
    """Terms of the split series for b >= 0 on a (k, m) block of points."""

    def __init__(self, X, Y, b):
        self.X, self.Y, self.b = X, Y, b
        self.tail_bottom = Y < _TAIL_CUTOFF
        self.tail_left = X < _TAIL_CUTOFF

    def base(self):
        X, Y, b = self.X, self.Y, self.b
        u = _g(X, b) * _g(Y, b)
        closed = self._closed_tail(X, Y, self.tail_bottom) + self._closed_tail(Y, X, self.tail_left)
        return u + closed

    def _closed_tail(self, s, t, use):
        # sum_n (-1)^{n+1} (2 / n pi) sin(n pi s) e^{-n pi t} e^{b(s+t-1)/2}
        q = np.exp(-np.pi * t)
        val = (2.0 / np.pi) * np.arctan2(q * _sinpi(s), 1.0 + q * np.cos(np.pi * s))
        return np.where(use, val * np.exp(self.b * (s + t - 1.0) / 2.0), 0.0)

    def _half(self, n, s, t, use_tail):
        # n: (B, 1, 1); s, t: (1, k, m)
        b = self.b
        pi_n = np.pi * n
        mu = 0.5 * np.sqrt(2.0 * b * b + 4.0 * pi_n * pi_n)
        F = 8.0 * pi_n / (b * b + 4.0 * pi_n * pi_n)
        sign = np.where(n % 2 == 1, 1.0, -1.0)
        lr = _log_sinh_ratio(mu, t)
        drift = b * (s + t - 1.0) / 2.0
        plain = F * np.exp(drift - mu * t + lr)
        # mu - n pi and F - 2/(n pi) in cancellation-free form
        delta = (0.5 * b * b) / (mu + pi_n)
        F_minus = -2.0 * b * b / (pi_n * (b * b + 4.0 * pi_n * pi_n))
        tail = np.exp(drift - pi_n * t) * (F * np.expm1(-delta * t + lr) + F_minus)
        return sign * _sinpi(n * s) * np.where(use_tail, tail, plain)

    def __call__(self, n, cols):
        nn = n[:, None, None].astype(float)
        X, Y = self.X[None, :, cols], self.Y[None, :, cols]
        return self._half(nn, X, Y, self.tail_bottom[None, :, cols]) + self._half(
            nn, Y, X, self.tail_left[None, :, cols]
        )


class _DirectTerms:
    """Terms of the printed series, each in combined-exponent form."""

    def __init__(self, X, Y, b):
        self.X, self.Y, self.b = X, Y, b

    def base(self):
        return np.zeros_like(self.X)

    def _half(self, n, s, t):
        b = self.b
        mu = 0.5 * np.sqrt(2.0 * b * b + 4.0 * (np.pi * n) ** 2)
        return _sinpi(n * s) * np.exp(b * (s + t) / 2.0 - mu * t + _log_sinh_ratio(mu, t))

    def __call__(self, n, cols):
        nn = n[:, None, None].astype(float)
        X, Y = self.X[None, :, cols], self.Y[None, :, cols]
        C = series_coefficient(nn, self.b)
        return C * (self._half(nn, X, Y) + self._half(nn, Y, X))


def _sum_series(terms, params: SeriesParams):
    """Sum terms until 5 consecutive ones are below tol (1 + |partial|) for every row of a column."""
    total = terms.base().astype(float)
    k, m = total.shape
    counts = np.zeros(m, dtype=np.int64)
    streak = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    n0, block = 1, 16
    last = 0.0
    while active.size and n0 <= params.n_max:
        n = np.arange(n0, min(n0 + block, params.n_max + 1))
        t = terms(n, active)  # (B, k, ma)
        partial = total[None, :, active] + np.cumsum(t, axis=0)
        small = np.all(np.abs(t) < params.tol * (1.0 + np.abs(partial)), axis=1)  # (B, ma)
        stop = np.full(active.size, -1)
        s = streak[active]
        for i in range(len(n)):
            s = np.where(small[i], s + 1, 0)
            newly = (s >= _STREAK) & (stop < 0)
            stop[newly] = i
        streak[active] = s
        idx = np.where(stop >= 0, stop, len(n) - 1)
        total[:, active] = partial[idx, :, np.arange(active.size)].T
        counts[active] = n[idx]
        last = float(np.max(np.abs(t[-1]))) if t.size else 0.0
        active = active[stop < 0]
        n0 = n[-1] + 1
        block = min(2 * block, 512)
    if active.size:
        raise TruncationError(
            f"series not converged after {params.n_max} terms at {active.size} point(s); "
            f"last term magnitude {last:.3e}",
            last_term=last,
        )
    return total, counts


def _evaluate(X, Y, params: SeriesParams):
    """Series value on (k, m) arrays; stopping is decided jointly per column."""
    if abs(params.b) > 200:
        raise ValueError(f"|b| = {abs(params.b)} exceeds 200")
    _check_unit(X, Y)
    X, Y = np.clip(X, 0.0, 1.0), np.clip(Y, 0.0, 1.0)
    b = params.b
    reflect = params.method == "split" and b < 0
    if reflect:
        X, Y, b = 1.0 - X, 1.0 - Y, -b
    out = np.empty_like(X)
    counts = np.empty(X.shape[1], dtype=np.int64)
    cls = _SplitTerms if params.method == "split" else _DirectTerms
    for s in range(0, X.shape[1], _POINT_CHUNK):
        sl = slice(s, s + _POINT_CHUNK)
        out[:, sl], counts[sl] = _sum_series(cls(X[:, sl], Y[:, sl], b), params)
    if reflect:
        out = 1.0 - out
    return out, counts


def exact_2d_with_counts(x, y, params: SeriesParams):
    """Series values and the number of terms used at each point."""
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = xa.shape
    vals, counts = _evaluate(xa.reshape(1, -1), ya.reshape(1, -1), params)
    return vals.reshape(shape), counts.reshape(shape)


def exact_2d(x, y, params: SeriesParams):
    """Analytic 2D solution at (x, y); scalars in, float out."""
    vals, _ = exact_2d_with_counts(x, y, params)
    return vals if vals.ndim else float(vals)


def exact_2d_gradient(x, y, params: SeriesParams, step: float = 1e-6):
    """Central-difference gradient; the four stencil points share one truncation index."""
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = xa.shape
    xa, ya = xa.ravel(), ya.ravel()
    hx_lo = np.minimum(step, xa)
    hx_hi = np.minimum(step, 1.0 - xa)
    hy_lo = np.minimum(step, ya)
    hy_hi = np.minimum(step, 1.0 - ya)
    X = np.stack([xa + hx_hi, xa - hx_lo, xa, xa])
    Y = np.stack([ya, ya, ya + hy_hi, ya - hy_lo])
    u, _ = _evaluate(X, Y, params)
    ux = (u[0] - u[1]) / (hx_hi + hx_lo)
    uy = (u[2] - u[3]) / (hy_hi + hy_lo)
    return ux.reshape(shape), uy.reshape(shape)


def fd_residual(field, b: float, points, step: float = 1e-4) -> float:
    """Max relative residual of lap(u) - b (u_x + u_y) by centered differences.

    ``field(X, Y)`` takes stacked (5, npts) coordinate arrays (centre, +x, -x,
    +y, -y) and returns values of the same shape. The result is
    max |lap_h u - b (D_x u + D_y u)| / (1 + |b| max |grad_h u|), both maxima
    over the given points.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    X = np.stack([x, x + step, x - step, x, x])
    Y = np.stack([y, y, y, y + step, y - step])
    u = np.asarray(field(X, Y), dtype=float)
    lap = (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / step**2
    ux = (u[1] - u[2]) / (2.0 * step)
    uy = (u[3] - u[4]) / (2.0 * step)
    res = np.abs(lap - b * (ux + uy))
    grad = np.sqrt(ux**2 + uy**2)
    return float(res.max() / (1.0 + abs(b) * grad.max()))


def oracle_residual_check(params: SeriesParams, points, step: float = 1e-4) -> float:
    """fd_residual of the series solution at interior points.

    The five stencil points of each sample share one truncation index so that
    truncation stays smooth across the stencil.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(pts < 0.05 - 1e-12) or np.any(pts > 0.95 + 1e-12):
        raise OracleDomainError("residual check points must be at least 0.05 from the boundary")
    return fd_residual(lambda X, Y: _evaluate(X, Y, params)[0], params.b, pts, step)


def residual_check_1d(b: float, points, step: float = 1e-4) -> float:
    """Same relative residual for u'' - b u' = 0 with the 1D closed form."""
    x = np.asarray(points, dtype=float).ravel()
    x = x[(x >= 0.05) & (x <= 0.95)]
    if x.size == 0:
        x = np.linspace(0.1, 0.9, 9)
    u0, up, um = exact_1d(x, b), exact_1d(x + step, b), exact_1d(x - step, b)
    d2 = (up - 2.0 * u0 + um) / step**2
    d1 = (up - um) / (2.0 * step)
    return float(np.max(np.abs(d2 - b * d1)) / (1.0 + abs(b) * np.max(np.abs(d1))))
