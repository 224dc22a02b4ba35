import math

import numpy as np
import pytest

from convdiff.assembly import assemble, build_dof_map, solve_problem
from convdiff.mesh import build_interval_mesh
from convdiff.problem import paper_1d
from convdiff.stabilization import (
    Mode,
    StabilizationConfig,
    artificial_diffusion_increment,
    element_peclet,
    tau_supg,
    xi_optimal,
)


def coth(x):
    return math.cosh(x) / math.sinh(x)


def test_peclet_examples():
    assert float(element_peclet(50, 1.0, 1.0, 0.1)) == pytest.approx(2.5)
    assert float(element_peclet(0, 1.0, 1.0, 0.1)) == 0.0
    assert float(element_peclet(50, 1.0, 1.0, 1 / 30)) == pytest.approx(5 / 6)


def test_xi_limits_and_value():
    assert xi_optimal(0.0) == 0.0
    assert xi_optimal(1e-6) == pytest.approx(1e-6 / 3, rel=1e-10)
    assert xi_optimal(1e6) == pytest.approx(1.0, abs=1e-5)
    assert xi_optimal(1.0) == pytest.approx(coth(1.0) - 1.0, abs=1e-14)
    assert xi_optimal(1.0) == pytest.approx(0.3130353, abs=1e-7)


@pytest.mark.parametrize("switch", [1e-4, 0.5])
def test_xi_continuous_across_branch_switch(switch):
    below = xi_optimal(np.nextafter(switch, 0))
    above = xi_optimal(switch)
    assert abs(above - below) <= 1e-14 * above


def test_xi_small_pe_against_taylor_by_hand():
    # 1/3 x - 1/45 x^3 + 2/945 x^5 - 1/4725 x^7 is good to 1e-16 relative at x = 0.01
    x = 0.01
    expected = x / 3 - x**3 / 45 + 2 * x**5 / 945 - x**7 / 4725
    assert xi_optimal(x) == pytest.approx(expected, rel=1e-15)


def test_xi_monotone_bounded():
    pe = np.linspace(0.0, 100.0, 1000)
    xi = xi_optimal(pe)
    assert np.all(np.diff(xi) > 0)
    assert np.all((xi >= 0) & (xi < 1))


def test_tau_examples():
    assert tau_supg(0.0, 1.0, 1.0, 0.1) == 0.0
    expected = (0.1 / 100) * (coth(2.5) - 0.4)
    assert tau_supg(50.0, 1.0, 1.0, 0.1) == pytest.approx(expected, rel=1e-13)
    # 0.001 * (1.0135673 - 0.4)
    assert tau_supg(50.0, 1.0, 1.0, 0.1) == pytest.approx(6.13567e-4, rel=1e-5)


def test_artificial_diffusion_examples():
    assert artificial_diffusion_increment(50, 0.1, 0.0) == 0.0
    assert artificial_diffusion_increment(50, 0.1, 0.5) == pytest.approx(1.25)


def test_config_validation():
    assert StabilizationConfig("supg").mode is Mode.SUPG
    with pytest.raises(ValueError):
        StabilizationConfig(Mode.ARTIFICIAL_DIFFUSION, beta=-1.0)


@pytest.mark.parametrize("n", [4, 8, 16, 32])
@pytest.mark.parametrize("b", [10.0, 50.0, 200.0])
def test_supg_nodal_exactness(n, b):
    sol = solve_problem(paper_1d(b), build_interval_mesh(n), 1, StabilizationConfig(Mode.SUPG))
    x = sol.coords[:, 0]
    exact = np.array([(math.exp(b * t - b) - 1.0) / (math.exp(-b) - 1.0) for t in x])
    np.testing.assert_allclose(sol.values, exact, atol=1e-9, rtol=0)


@pytest.mark.parametrize("n", [4, 10, 32])
def test_supg_matrix_is_m_matrix(n):
    prob = paper_1d(50.0)
    mesh = build_interval_mesh(n)
    dm = build_dof_map(mesh, 1, prob)
    A = assemble(prob, mesh, dm, StabilizationConfig(Mode.SUPG), apply_bc=False).matrix.to_dense()
    off = A - np.diag(np.diag(A))
    assert np.all(np.diag(A) > 0)
    assert np.all(off <= 1e-13)


def test_supg_with_zero_tau_is_galerkin_bitwise():
    prob = paper_1d(0.0)
    mesh = build_interval_mesh(12)
    dm = build_dof_map(mesh, 3, prob)
    gal = assemble(prob, mesh, dm, StabilizationConfig(Mode.GALERKIN))
    supg = assemble(prob, mesh, dm, StabilizationConfig(Mode.SUPG))
    assert gal.matrix.values.tobytes() == supg.matrix.values.tobytes()
    assert gal.matrix.column_indices.tobytes() == supg.matrix.column_indices.tobytes()
    assert gal.rhs.tobytes() == supg.rhs.tobytes()


@pytest.mark.parametrize("n", [2, 5, 10, 40])
def test_full_upwind_removes_oscillation(n):
    b = 50.0
    h = 1.0 / n
    sol = solve_problem(paper_1d(b), build_interval_mesh(n), 1,
                        StabilizationConfig(Mode.ARTIFICIAL_DIFFUSION, beta=1.0))
    # recurrence with augmented diffusion 1 + b h / 2
    pe = b * h / (2 * (1 + b * h / 2))
    assert pe < 1
    rho = (1 + pe) / (1 - pe)
    j = np.arange(n + 1)
    expected = (rho**j - rho**n) / (1 - rho**n)
    np.testing.assert_allclose(sol.values[: n + 1], expected, atol=1e-10)
    assert sol.values.max() <= 1.0 + 1e-12
    assert sol.values.min() >= -1e-12
