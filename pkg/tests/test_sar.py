import math

import numpy as np
import pytest

from catena.errors import NoConvergence, SingularGap
from catena.geometry import Grid, Profile, catenoid_profile, solve_branches
from catena.linalg import matrix_spectrum
from catena.sar import (
    ContinuationStopped, ForceField, check_gap, continue_in_lambda, df_operator, dgsar_operator, gsar,
    jacobian_values, residual, residual_values, solve_stationary,
)
from catena.shooting import eigenvalue, sturm_liouville_operator

SIGMA = 2.0


def smooth_random(grid, seed, modes=6):
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    v = np.sin(np.outer(np.pi * (grid.nodes + 1) / 2, k)) @ (rng.standard_normal(modes) / k)
    v[0] = v[-1] = 0.0
    return v


@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_catenoid_residual_vanishes_under_refinement(branch):
    c = solve_branches(SIGMA).c(branch)
    errs = [np.max(np.abs(residual(catenoid_profile(c, Grid(n)), SIGMA, 0.0)))
            for n in (41, 81, 161)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)
    assert len(residual(catenoid_profile(c, Grid(41)), SIGMA, 0.0)) == 39


@pytest.mark.parametrize("lam", [0.0, 0.05])
@pytest.mark.parametrize("seed", range(10))
def test_jacobian_matches_central_differences_for_random_directions(lam, seed):
    g = Grid(201)
    u = catenoid_profile(solve_branches(SIGMA).c_in, g).values
    v = np.zeros(g.n)
    v[1:-1] = np.random.default_rng(seed).standard_normal(g.n - 2)
    eps = 1e-6
    fd = (residual_values(u + eps * v, g.h, SIGMA, lam)
          - residual_values(u - eps * v, g.h, SIGMA, lam)) / (2 * eps)
    jv = jacobian_values(u, g.h, SIGMA, lam).matvec(v[1:-1])
    assert np.max(np.abs(fd + jv)) <= 1e-6 * (1 + np.max(np.abs(jv)))


@pytest.mark.parametrize("lam", [0.0, 0.03])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_jacobian_matches_central_differences(lam, seed):
    g = Grid(201)
    u = catenoid_profile(solve_branches(SIGMA).c_out, g).values
    v = smooth_random(g, seed)
    eps = 1e-6
    fd = (residual_values(u + eps * v, g.h, SIGMA, lam)
          - residual_values(u - eps * v, g.h, SIGMA, lam)) / (2 * eps)
    # the Jacobian linearizes F + lam g, which is minus the residual
    jv = jacobian_values(u, g.h, SIGMA, lam).matvec(v[1:-1])
    assert np.max(np.abs(fd + jv)) <= 1e-6 * np.max(np.abs(jv))


def test_diffusion_block_is_self_adjoint():
    g = Grid(201)
    u = catenoid_profile(solve_branches(SIGMA).c_in, g).values
    op = df_operator(u, g.h, SIGMA)
    rng = np.random.default_rng(7)
    v, w = rng.standard_normal((2, g.n - 2))
    assert abs(op.matvec(v) @ w - v @ op.matvec(w)) <= 1e-10 * np.max(np.abs(op.diag))


def test_linearization_at_catenoid_converges_to_scaled_sturm_liouville():
    c = solve_branches(SIGMA).c_out
    diffs = []
    for n in (51, 101, 201):
        g = Grid(n)
        u = catenoid_profile(c, g).values
        f = np.cos(np.pi * g.interior / 2)
        a = df_operator(u, g.h, SIGMA).matvec(f)
        b = SIGMA**2 * sturm_liouville_operator(c, g).matvec(f)
        diffs.append(np.max(np.abs(a - b)))
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(orders > 1.8)


def test_linearization_spectrum_is_sigma_squared_mu():
    b = solve_branches(SIGMA)
    g = Grid(401)
    for c in (b.c_out, b.c_in):
        u = catenoid_profile(c, g).values
        lead = matrix_spectrum(df_operator(u, g.h, SIGMA), 1)[0]
        mu = eigenvalue(c, 0, Grid(801)).mu
        assert lead == pytest.approx(SIGMA**2 * mu, rel=1e-4)


def test_gsar_matches_closed_form_on_inner_catenoid():
    c = solve_branches(SIGMA).c_in
    errs = []
    for n in (101, 201, 401):
        g = Grid(n)
        z = g.nodes
        exact = math.cosh(c) ** 2 / np.cosh(c * z) / np.log(2 * math.cosh(c) / np.cosh(c * z)) ** 2
        errs.append(np.max(np.abs(gsar(catenoid_profile(c, g), SIGMA).values - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


def test_flat_film_values():
    g = Grid(21)
    flat = Profile(g, np.zeros(g.n))
    assert np.allclose(gsar(flat, SIGMA).values, 1 / math.log(2) ** 2, rtol=1e-15)
    assert np.array_equal(residual(flat, SIGMA, 0.0), np.ones(g.n - 2))


def test_jacobian_is_affine_in_lambda():
    g = Grid(101)
    u = catenoid_profile(solve_branches(SIGMA).c_out, g).values
    j0 = jacobian_values(u, g.h, SIGMA, 0.0).to_dense()
    j1 = jacobian_values(u, g.h, SIGMA, 0.1).to_dense()
    assert np.allclose(j1 - j0, 0.1 * dgsar_operator(u, g.h, SIGMA).to_dense(), rtol=0, atol=1e-10)


def test_linearization_at_catenoid_approximates_nondivergence_form():
    # sigma^2 / cosh^2 v'' - 2 sigma^2 c tanh / cosh^2 v' + sigma^2 c^2 / cosh^2 v
    c = solve_branches(SIGMA).c_out
    diffs = []
    for n in (51, 101, 201):
        g = Grid(n)
        z = g.nodes
        f = np.cos(np.pi * z / 2)
        fp = -np.pi / 2 * np.sin(np.pi * z / 2)
        fpp = -(np.pi / 2) ** 2 * f
        ch2 = np.cosh(c * z) ** 2
        exact = SIGMA**2 * (fpp - 2 * c * np.tanh(c * z) * fp + c * c * f) / ch2
        u = catenoid_profile(c, g).values
        diffs.append(np.max(np.abs(df_operator(u, g.h, SIGMA).matvec(f[1:-1]) - exact[1:-1])))
    assert np.all(np.log2(np.array(diffs[:-1]) / np.array(diffs[1:])) > 1.8)


def test_inner_linearization_has_one_unstable_direction():
    g = Grid(401)
    u = catenoid_profile(solve_branches(SIGMA).c_in, g).values
    top = matrix_spectrum(df_operator(u, g.h, SIGMA), 5)
    assert np.sum(top > 0) == 1
    u = catenoid_profile(solve_branches(SIGMA).c_out, g).values
    assert matrix_spectrum(df_operator(u, g.h, SIGMA), 1)[0] < 0


@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_newton_returns_to_catenoid_after_bump(branch):
    g = Grid(401)
    u = catenoid_profile(solve_branches(SIGMA).c(branch), g)
    bump = Profile(g, u.values + 1e-3 * (1 - g.nodes**2))
    sol = solve_stationary(SIGMA, 0.0, bump)
    assert np.max(np.abs(sol.values - u.values)) <= 1e-8


def test_gap_and_force_validation():
    with pytest.raises(SingularGap):
        check_gap(np.array([0.0, -1.0 + 1e-7, 0.0]))
    with pytest.raises(SingularGap):
        check_gap(np.array([0.0, 1.0 - 1e-7, 0.0]))
    with pytest.raises(ValueError):
        ForceField(Grid(3), np.array([0.0, -1.0, 0.0]))


def test_newton_recovers_discrete_catenoid_from_perturbation():
    g = Grid(201)
    u = catenoid_profile(solve_branches(SIGMA).c_out, g)
    start = Profile(g, u.values + 0.05 * smooth_random(g, 3) * (1 - g.nodes**2))
    sol = solve_stationary(SIGMA, 0.0, start)
    assert np.max(np.abs(residual(sol, SIGMA, 0.0))) <= 1e-10
    assert np.max(np.abs(sol.values - u.values)) < 1e-5


@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_continuation_is_converged_and_symmetric(branch):
    curve = continue_in_lambda(SIGMA, branch, 0.05, 10, Grid(401))
    assert len(curve.lambdas) == 11 and all(curve.converged)
    assert max(curve.residuals[1:]) <= 1e-10
    assert max(p.symmetry_defect() for p in curve.profiles) <= 1e-8
    start = catenoid_profile(solve_branches(SIGMA).c(branch), Grid(401))
    assert np.max(np.abs(curve.at(0.0).values - start.values)) <= 1e-10
    centers = [p.values[200] for p in curve.profiles]
    if branch == "outer":
        assert np.all(np.diff(centers) > 0)
    else:
        assert np.all(np.diff(centers) < 0)
    with pytest.raises(KeyError):
        curve.at(0.0123)


def test_continuation_records_fold_and_raises():
    with pytest.raises(ContinuationStopped) as info:
        continue_in_lambda(SIGMA, "outer", 10.0, 2, Grid(101))
    curve = info.value.curve
    assert curve.fold_lambda is not None and curve.fold_lambda < 10.0
    assert isinstance(info.value, NoConvergence)
    relaxed = continue_in_lambda(SIGMA, "outer", 10.0, 2, Grid(101), strict=False)
    assert relaxed.fold_lambda == curve.fold_lambda


def test_grid_convergence_of_stationary_solution():
    sols = {}
    for n in (51, 101, 201, 401):
        g = Grid(n)
        sols[n] = solve_stationary(SIGMA, 0.03, catenoid_profile(solve_branches(SIGMA).c_out, g))
    diffs = []
    for a, b in ((51, 101), (101, 201), (201, 401)):
        diffs.append(np.max(np.abs(sols[b].values[::2] - sols[a].values)))
    order = np.polyfit(np.log([2 / 50, 2 / 100, 2 / 200]), np.log(diffs), 1)[0]
    assert order >= 1.8
