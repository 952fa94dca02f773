import math

import numpy as np
import pytest

from catena.errors import SingularGap
from catena.fbp import (
    boundary_data, continue_in_lambda_fbp, default_n_eta, electrostatic_force, fbp_force_values,
    residual_fbp, solve_potential, solve_potential_values, solve_stationary_fbp,
)
from catena.geometry import Grid, catenoid_profile, solve_branches
from catena.sar import residual

SIGMA = 2.0


def test_boundary_data_is_logarithmic():
    assert boundary_data(0.0, 1.0) == 0.0
    assert boundary_data(0.0, 2.0) == pytest.approx(1.0)
    assert boundary_data(-0.5, 1.0) == pytest.approx(math.log(2.0) / math.log(4.0))
    with pytest.raises(SingularGap):
        boundary_data(-1.0, 1.0)


def test_default_n_eta():
    assert default_n_eta(201) == 102
    assert default_n_eta(3) == 3


@pytest.mark.parametrize("u0", [-0.5, 0.0, 0.5])
def test_constant_film_reproduces_radial_potential(u0):
    g = Grid(21)
    pot = solve_potential_values(g, np.full(g.n, u0), SIGMA, 129)
    R = u0 + 1.0
    exact = np.log(pot.r / R) / np.log(2.0 / R)
    assert np.max(np.abs(pot.psi - exact)) < 1e-4
    assert pot.solve_residual <= 1e-10


@pytest.mark.parametrize("u0", [-0.5, 0.0, 0.5])
def test_force_on_constant_film_converges_at_second_order(u0):
    exact = 1.0 / ((u0 + 1.0) ** 2 * math.log(2.0 / (u0 + 1.0)) ** 2)
    errs = []
    for ne in (33, 65, 129):
        g = Grid(11)
        errs.append(np.max(np.abs(fbp_force_values(g, np.full(g.n, u0), SIGMA, ne) - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_potential_on_catenoid_is_symmetric_and_bounded(branch):
    g = Grid(101)
    u = catenoid_profile(solve_branches(SIGMA).c(branch), g)
    pot = solve_potential(u, SIGMA)
    assert pot.symmetry_defect() <= 1e-12
    assert pot.psi.min() >= -1e-12 and pot.psi.max() <= 1 + 1e-12
    assert np.allclose(pot.psi[:, 0], 0.0) and np.allclose(pot.psi[:, -1], 1.0)
    g_fbp = electrostatic_force(u, pot, SIGMA).values
    assert np.max(np.abs(g_fbp - g_fbp[::-1])) <= 1e-10
    assert np.all(g_fbp > 0)


def test_force_requires_matching_film():
    g = Grid(21)
    u = catenoid_profile(solve_branches(SIGMA).c_out, g)
    pot = solve_potential(u, SIGMA)
    other = catenoid_profile(solve_branches(SIGMA).c_in, g)
    with pytest.raises(ValueError):
        electrostatic_force(other, pot, SIGMA)


def test_fbp_residual_without_voltage_is_the_sar_residual():
    g = Grid(41)
    u = catenoid_profile(solve_branches(SIGMA).c_out, g)
    assert np.array_equal(residual_fbp(u, SIGMA, 0.0), residual(u, SIGMA, 0.0))


def test_force_derivative_strategies_reach_the_same_solution():
    g = Grid(31)
    start = catenoid_profile(solve_branches(SIGMA).c_out, g)
    sols = [solve_stationary_fbp(SIGMA, 0.03, start, dg=dg) for dg in ("frozen", "sar", "fd")]
    for s in sols:
        assert np.max(np.abs(residual_fbp(s, SIGMA, 0.03))) <= 1e-8
    assert np.max(np.abs(sols[0].values - sols[2].values)) < 1e-7
    assert np.max(np.abs(sols[1].values - sols[2].values)) < 1e-7


@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_fbp_continuation_small_grid(branch):
    curve = continue_in_lambda_fbp(SIGMA, branch, 0.05, 5, Grid(41))
    assert len(curve.lambdas) == 6
    assert max(curve.residuals[1:]) <= 1e-8
    assert max(p.symmetry_defect() for p in curve.profiles) <= 1e-7


def test_potential_refuses_touching_film():
    g = Grid(5)
    with pytest.raises(SingularGap):
        solve_potential_values(g, np.array([0.0, -0.9999999, -0.9999999, -0.5, 0.0]), SIGMA)
