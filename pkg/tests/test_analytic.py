import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convdiff.analytic import (
    OracleDomainError,
    SeriesParams,
    TruncationError,
    exact_1d,
    exact_1d_derivative,
    exact_2d,
    exact_2d_gradient,
    exact_2d_with_counts,
    fd_residual,
    oracle_residual_check,
    residual_check_1d,
    series_coefficient,
)

GRID5 = [(x, y) for x in np.linspace(0.1, 0.9, 5) for y in np.linspace(0.1, 0.9, 5)]


def test_exact_1d_examples():
    assert exact_1d(0.0, 50) == 1.0
    assert exact_1d(1.0, 50) == 0.0
    assert exact_1d(0.25, 1e-10) == pytest.approx(0.75, abs=1e-12)
    assert exact_1d(0.25, 0.0) == 0.75
    expected = (1 - math.exp(-5)) / (1 - math.exp(-50))
    assert exact_1d(0.9, 50) == pytest.approx(expected, rel=1e-14)
    assert exact_1d(0.9, 50) == pytest.approx(0.99326205, abs=1e-8)


def test_exact_1d_large_b_no_overflow():
    u = exact_1d(np.linspace(0, 1, 11), 700)
    assert np.all(np.isfinite(u))
    with pytest.raises(ValueError):
        exact_1d(0.5, 701)


def test_exact_1d_negative_b_matches_printed_form():
    b, x = -7.0, 0.3
    printed = (math.exp(b * x) - math.exp(b)) / (1 - math.exp(b))
    assert exact_1d(x, b) == pytest.approx(printed, rel=1e-14)


def test_exact_1d_domain():
    with pytest.raises(OracleDomainError):
        exact_1d(1.5, 10)


def test_exact_1d_derivative():
    b, x, h = 10.0, 0.7, 1e-6
    fd = (exact_1d(x + h, b) - exact_1d(x - h, b)) / (2 * h)
    assert exact_1d_derivative(x, b) == pytest.approx(fd, rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(b=st.floats(0.01, 300), x1=st.floats(0, 1), x2=st.floats(0, 1))
def test_exact_1d_monotone_bounded(b, x1, x2):
    lo, hi = sorted((x1, x2))
    ulo, uhi = exact_1d(lo, b), exact_1d(hi, b)
    assert 0.0 <= uhi <= ulo <= 1.0


def test_series_coefficient_examples():
    assert series_coefficient(1, 0.0) == pytest.approx(4 / math.pi, rel=1e-15)
    assert series_coefficient(1, 0.0) == pytest.approx(1.2732395, abs=1e-7)
    assert series_coefficient(2, 0.0) == 0.0
    n, b = 10_000, 10.0
    assert series_coefficient(n, b) * n * math.pi / 2 == pytest.approx(1 - math.exp(-b / 2), rel=1e-6)


def test_params_validation():
    with pytest.raises(ValueError):
        SeriesParams(1.0, tol=0.0)
    with pytest.raises(ValueError):
        SeriesParams(1.0, n_max=0)


@pytest.mark.parametrize("method", ["split", "direct"])
@pytest.mark.parametrize("b", [0.0, 10.0, 50.0])
def test_top_side_is_zero(method, b):
    assert exact_2d(0.5, 1.0, SeriesParams(b, method=method)) == 0.0
    assert exact_2d(1.0, 0.3, SeriesParams(b, method=method)) == 0.0


@pytest.mark.parametrize("method", ["split", "direct"])
def test_centre_at_zero_convection(method):
    assert exact_2d(0.5, 0.5, SeriesParams(0.0, method=method)) == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("b", [0.0, 10.0, 50.0, -30.0])
def test_swap_symmetry(b):
    p = SeriesParams(b)
    rng = np.random.default_rng(1)
    x, y = rng.random(50), rng.random(50)
    np.testing.assert_allclose(exact_2d(x, y, p), exact_2d(y, x, p), atol=1e-14, rtol=0)


def test_point_reflection_at_zero_convection():
    p = SeriesParams(0.0)
    x = np.array([q[0] for q in GRID5])
    y = np.array([q[1] for q in GRID5])
    np.testing.assert_allclose(exact_2d(x, y, p) + exact_2d(1 - x, 1 - y, p), 1.0, atol=1e-8)


def test_negative_b_reflection():
    rng = np.random.default_rng(5)
    x, y = rng.random(20), rng.random(20)
    np.testing.assert_allclose(exact_2d(x, y, SeriesParams(-20.0)),
                               1 - exact_2d(1 - x, 1 - y, SeriesParams(20.0)), atol=1e-13)


@pytest.mark.parametrize("b", [0.0, 10.0, 50.0, 200.0])
def test_boundary_recovery_on_inflow_sides(b):
    x = np.linspace(0.1, 0.9, 20)
    u = exact_2d(x, np.zeros_like(x), SeriesParams(b, tol=1e-10))
    assert np.max(np.abs(u - 1.0)) <= 1e-3
    u = exact_2d(np.zeros_like(x), x, SeriesParams(b, tol=1e-10))
    assert np.max(np.abs(u - 1.0)) <= 1e-3


@pytest.mark.parametrize("b", [0.0, 10.0, 50.0])
def test_split_and_direct_agree_in_interior(b):
    x, y = np.meshgrid(np.linspace(0.1, 0.9, 7), np.linspace(0.1, 0.9, 7))
    us = exact_2d(x, y, SeriesParams(b, tol=1e-13))
    ud = exact_2d(x, y, SeriesParams(b, tol=1e-13, method="direct"))
    np.testing.assert_allclose(us, ud, atol=1e-6)


def test_split_matches_literal_series_at_moderate_b():
    # literal term-by-term sum with plain floats at b = 4; terms past n = 150
    # are below e^{-0.3 pi 150} and sinh(mu) would overflow soon after
    b, x, y = 4.0, 0.3, 0.6
    total = 0.0
    for n in range(1, 151):
        mu = math.sqrt(2 * b * b + 4 * n * n * math.pi**2) / 2
        cn = 8 * n * math.pi * (1 - (-1) ** n * math.exp(-b / 2)) / (b * b + 4 * n * n * math.pi**2)
        rx = math.sinh(mu * (1 - x)) / math.sinh(mu)
        ry = math.sinh(mu * (1 - y)) / math.sinh(mu)
        total += cn * (math.sin(n * math.pi * x) * ry + math.sin(n * math.pi * y) * rx)
    total *= math.exp(b * (x + y) / 2)
    assert exact_2d(x, y, SeriesParams(b)) == pytest.approx(total, abs=1e-9)


def test_values_in_data_range():
    rng = np.random.default_rng(8)
    u = exact_2d(rng.random(200), rng.random(200), SeriesParams(50.0))
    assert np.all((u >= -1e-9) & (u <= 1 + 1e-9))


def test_truncation_error_reported():
    with pytest.raises(TruncationError) as info:
        exact_2d(0.5, 0.01, SeriesParams(0.0, tol=1e-14, n_max=3, method="direct"))
    assert info.value.last_term > 0


def test_domain_checks():
    with pytest.raises(OracleDomainError):
        exact_2d(1.2, 0.5, SeriesParams(1.0))
    with pytest.raises(ValueError):
        exact_2d(0.5, 0.5, SeriesParams(250.0))
    with pytest.raises(OracleDomainError):
        oracle_residual_check(SeriesParams(0.0), [(0.01, 0.5)])


def test_term_counts_reported():
    _, counts = exact_2d_with_counts(np.array([0.5, 0.5]), np.array([0.5, 1.0]), SeriesParams(10.0))
    assert counts[0] >= 5
    assert counts.dtype.kind == "i"


def test_residual_check_zero_convection():
    assert oracle_residual_check(SeriesParams(0.0), GRID5) < 1e-5


def test_residual_check_strong_convection():
    pts = [(x, y) for x in np.linspace(0.1, 0.9, 5) for y in np.linspace(0.1, 0.9, 5)]
    assert oracle_residual_check(SeriesParams(50.0), pts) < 1e-4


def test_residual_stencil_on_constant_field():
    assert fd_residual(lambda X, Y: np.full_like(X, 0.7), 50.0, GRID5) == 0.0


def test_residual_check_detects_wrong_field():
    # u = x solves lap u = 0 but not the convective operator
    assert fd_residual(lambda X, Y: X, 10.0, GRID5) > 0.5


def test_residual_check_1d():
    assert residual_check_1d(50.0, np.linspace(0.1, 0.9, 9)) < 1e-5


def test_gradient_matches_wider_stencil():
    p = SeriesParams(10.0, tol=1e-13)
    ux, uy = exact_2d_gradient(0.4, 0.3, p)
    h = 1e-4
    fx = (exact_2d(0.4 + h, 0.3, p) - exact_2d(0.4 - h, 0.3, p)) / (2 * h)
    fy = (exact_2d(0.4, 0.3 + h, p) - exact_2d(0.4, 0.3 - h, p)) / (2 * h)
    assert ux == pytest.approx(fx, rel=1e-5)
    assert uy == pytest.approx(fy, rel=1e-5)
