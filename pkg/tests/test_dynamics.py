import numpy as np
import pytest

from catena.dynamics import (
    STABLE, UNSTABLE, ModelParams, Trajectory, evolve, fit_decay_rate, leading_eigenfunction,
    perturbed, secant_operator, step,
)
from catena.errors import CeilingContact, InsufficientDecay, Touchdown
from catena.geometry import Grid, Profile
from catena.sar import branch_catenoid, diffusion_values, solve_stationary
from catena.verify import stability_run

SIGMA = 2.0


def test_secant_operator_reproduces_arctan_flux():
    g = Grid(101)
    u = branch_catenoid(SIGMA, "inner", g).values
    A = secant_operator(u, g.h, SIGMA)
    assert np.allclose(A.matvec(u[1:-1]), diffusion_values(u, g.h, SIGMA), rtol=0, atol=1e-9)


def test_first_step_from_flat_film_moves_inward_by_dt():
    g = Grid(101)
    dt = 1e-3
    u = step(Profile(g, np.zeros(g.n)), dt, ModelParams(SIGMA))
    assert np.all(u.values[1:-1] < 0)
    assert u.values[50] == pytest.approx(-dt, rel=1e-3)


@pytest.mark.parametrize("lam", [0.0, 0.01])
@pytest.mark.parametrize("branch", ["outer", "inner"])
def test_stationary_films_are_fixed_points(lam, branch):
    g = Grid(201)
    ref = solve_stationary(SIGMA, lam, branch_catenoid(SIGMA, branch, g))
    moved = step(ref, 1e-3, ModelParams(SIGMA, lam))
    assert np.max(np.abs(moved.values - ref.values)) <= 1e-9


def test_first_order_in_time():
    g = Grid(101)
    p = ModelParams(SIGMA, 0.01)
    z = g.nodes
    u0 = Profile(g, -0.2 * (1 - z**2))
    ends = {}
    for dt in (1e-3, 5e-4, 2.5e-4):
        ends[dt] = evolve(u0, 0.2, dt, p, u0).profiles[-1].values
    e1 = np.max(np.abs(ends[1e-3] - ends[5e-4]))
    e2 = np.max(np.abs(ends[5e-4] - ends[2.5e-4]))
    assert 1.7 < e1 / e2 < 2.3


def test_symmetry_is_preserved():
    g = Grid(201)
    p = ModelParams(SIGMA, 0.01)
    ref = solve_stationary(SIGMA, 0.01, branch_catenoid(SIGMA, "outer", g))
    traj = evolve(perturbed(ref, leading_eigenfunction(ref, p), 1e-3), 1.0, 1e-3, p, ref)
    assert max(q.symmetry_defect() for q in traj.profiles) <= 1e-8
    assert np.all(np.diff(traj.times) > 0)
    assert np.all(np.diff(traj.norms) < 0)


def test_inward_push_of_inner_branch_touches_down():
    g = Grid(101)
    p = ModelParams(SIGMA, 0.01)
    ref = solve_stationary(SIGMA, 0.01, branch_catenoid(SIGMA, "inner", g))
    traj = evolve(perturbed(ref, leading_eigenfunction(ref, p), -0.05), 5.0, 1e-3, p, ref)
    assert traj.event is not None and traj.event.kind == "Touchdown"
    assert traj.event.t < 5.0


def test_large_voltage_reaches_the_cylinder():
    g = Grid(101)
    out = branch_catenoid(SIGMA, "outer", g)
    traj = evolve(out, 5.0, 1e-4, ModelParams(SIGMA, 3.0), out)
    assert traj.event.kind == "CeilingContact"


def test_step_raises_events_directly():
    g = Grid(11)
    with pytest.raises(Touchdown):
        step(Profile(g, np.r_[0.0, np.full(9, -0.999999), 0.0]), 1.0, ModelParams(SIGMA))
    with pytest.raises(CeilingContact):
        step(Profile(g, np.r_[0.0, np.full(9, 0.95), 0.0]), 1.0, ModelParams(SIGMA, 50.0))
    with pytest.raises(ValueError):
        step(Profile(g, np.zeros(11)), 0.0, ModelParams(SIGMA))


def test_outer_branch_decays_at_the_spectral_rate():
    traj, rep = stability_run(SIGMA, 0.0, "outer")
    assert rep.verdict == STABLE and rep.fitted_rate < 0
    assert rep.fitted_rate == pytest.approx(rep.spectral_bound, rel=0.05)


def test_inner_branch_grows():
    traj, rep = stability_run(SIGMA, 0.0, "inner")
    assert rep.verdict == UNSTABLE and rep.fitted_rate > 0
    assert traj.left_ball and traj.growth_factor() >= 10


def test_fit_needs_enough_decay():
    g = Grid(11)
    ref = Profile(g, np.zeros(11))
    short = Trajectory([0.0, 1.0], [ref, ref], [1.0, 0.5], ref, ModelParams(SIGMA))
    with pytest.raises(InsufficientDecay):
        fit_decay_rate(short)
    times = list(np.linspace(0, 1, 30))
    flat = Trajectory(times, [ref] * 30, [1.0] * 30, ref, ModelParams(SIGMA))
    with pytest.raises(InsufficientDecay):
        fit_decay_rate(flat)


def test_fbp_model_steps():
    g = Grid(21)
    u = branch_catenoid(SIGMA, "outer", g)
    sar = step(u, 1e-3, ModelParams(SIGMA, 0.01))
    fbp = step(u, 1e-3, ModelParams(SIGMA, 0.01, "fbp"))
    assert 0 < np.max(np.abs(fbp.values - sar.values)) < 1e-4
    with pytest.raises(ValueError):
        ModelParams(SIGMA, 0.0, "other")


def test_evolve_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        evolve(Profile(Grid(5), np.zeros(5)), 1.0, 0.1, ModelParams(SIGMA),
               Profile(Grid(7), np.zeros(7)))
