"""Small-aspect-ratio film model: residual, Jacobian, Newton and continuation.

Stationary films solve

    -sigma d/dz arctan(sigma u_z) = -1/(u + 1) + lam * g_sar(u),   u(+-1) = 0,

with g_sar(u) = sqrt(1 + sigma^2 u_z^2) / ((u + 1)^2 ln^2(2/(u + 1))).

Sign convention: ``residual`` returns r = -(F(u) + lam g(u)) where
F(u) = sigma d/dz arctan(sigma u_z) - 1/(u + 1), and ``jacobian`` returns the
linearization of F + lam g, i.e. of -r.  At a catenoid that operator is the
DF(u) whose spectrum decides stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularGap, SingularOperator
from .geometry import EPS_GAP, Grid, Profile, catenoid_profile, slope, solve_branches
from .linalg import TridiagonalOperator

NEWTON_TOL = 1e-10
MAX_NEWTON = 50
ARMIJO_SLOPE = 1e-4
MAX_BACKTRACK = 20
# a Newton correction this small means the residual sits at its roundoff floor
ROUNDOFF_STEP = 1e-12


@dataclass(frozen=True)
class ForceField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("force density must be finite and nonnegative")


def check_gap(values: np.ndarray) -> None:
    lo = float(np.min(values)) + 1.0
    if lo <= EPS_GAP:
        raise SingularGap(f"film reaches the axis: min(u + 1) = {lo:.3e}")
    hi = float(np.max(values))
    if hi >= 1.0 - EPS_GAP:
        raise SingularGap(f"film reaches the cylinder: max(u) = {hi:.6f}")


def gsar_values(values: np.ndarray, h: float, sigma: float) -> np.ndarray:
    check_gap(values)
    y = values + 1.0
    uz = slope(values, h)
    return np.sqrt(1.0 + sigma**2 * uz**2) / (y**2 * np.log(2.0 / y) ** 2)


def gsar(u: Profile, sigma: float) -> ForceField:
    return ForceField(u.grid, gsar_values(u.values, u.grid.h, sigma))


def diffusion_values(values: np.ndarray, h: float, sigma: float) -> np.ndarray:
    """sigma d/dz arctan(sigma u_z) as a flux difference at interior nodes."""
    flux = np.arctan(sigma * np.diff(values) / h)
    return sigma * np.diff(flux) / h


def residual_values(values, h, sigma, lam, force=None) -> np.ndarray:
    """Interior residual; ``force`` overrides g_sar (used by the FBP model)."""
    check_gap(values)
    if force is None:
        force = gsar_values(values, h, sigma) if lam != 0 else 0.0
    g = force[1:-1] if np.ndim(force) else force
    return -diffusion_values(values, h, sigma) + 1.0 / (values[1:-1] + 1.0) - lam * g


def residual(u: Profile, sigma: float, lam: float) -> np.ndarray:
    """Residual at the n - 2 interior nodes; zero exactly at stationary films."""
    return residual_values(u.values, u.grid.h, sigma, lam)


def df_operator(values: np.ndarray, h: float, sigma: float) -> TridiagonalOperator:
    """Linearization of F: sigma^2 d/dz(v_z / (1 + sigma^2 u_z^2)) + v/(u + 1)^2."""
    s = np.diff(values) / h
    a = 1.0 / (1.0 + sigma**2 * s**2)
    k = sigma**2 / h**2
    diag = -k * (a[:-1] + a[1:]) + 1.0 / (values[1:-1] + 1.0) ** 2
    return TridiagonalOperator(k * a[1:-1], diag, k * a[1:-1].copy())


def dgsar_operator(values: np.ndarray, h: float, sigma: float) -> TridiagonalOperator:
    """Analytic derivative of g_sar at interior nodes (u_z by centered differences)."""
    y = values[1:-1] + 1.0
    L = np.log(2.0 / y)
    uz = (values[2:] - values[:-2]) / (2 * h)
    S = 1.0 + sigma**2 * uz**2
    Q = 1.0 / (y**2 * L**2)
    dQ = 2.0 * (1.0 - L) / (y**3 * L**3)
    dslope = sigma**2 * uz / np.sqrt(S) * Q / (2 * h)
    return TridiagonalOperator(-dslope[1:], np.sqrt(S) * dQ, dslope[:-1].copy())


def jacobian_values(values, h, sigma, lam) -> TridiagonalOperator:
    check_gap(values)
    op = df_operator(values, h, sigma)
    if lam != 0:
        op = op + dgsar_operator(values, h, sigma).scaled(lam)
    return op


def jacobian(u: Profile, sigma: float, lam: float) -> TridiagonalOperator:
    return jacobian_values(u.values, u.grid.h, sigma, lam)


def damped_newton(res_fn, jac_fn, x0, tol=NEWTON_TOL, max_iter=MAX_NEWTON):
    """Newton iteration for res(x) = 0 with jac = -d res/dx and Armijo backtracking.

    Stops when max|res| <= tol, or when the residual cannot decrease any more and
    the Newton correction is below ROUNDOFF_STEP (roundoff floor of stiff grids).
    Returns (x, max|res|, iterations).
    """
    x = np.array(x0, dtype=float)
    r = res_fn(x)
    for it in range(max_iter + 1):
        rmax = float(np.max(np.abs(r)))
        if rmax <= tol:
            return x, rmax, it
        if it == max_iter:
            break
        delta = jac_fn(x).solve(r)
        r2 = float(r @ r)
        t = 1.0
        for _ in range(MAX_BACKTRACK):
            trial = x + t * delta
            try:
                r_trial = res_fn(trial)
            except SingularGap:
                t *= 0.5
                continue
            if float(r_trial @ r_trial) <= (1.0 - 2.0 * ARMIJO_SLOPE * t) * r2:
                break
            t *= 0.5
        else:
            if float(np.max(np.abs(delta))) <= ROUNDOFF_STEP:
                return x, rmax, it
            raise NoConvergence(f"line search failed at Newton iteration {it} (max|r| = {rmax:.2e})")
        x, r = trial, r_trial
    raise NoConvergence(f"no convergence in {max_iter} Newton iterations (max|r| = {rmax:.2e})")


def solve_stationary(sigma: float, lam: float, init: Profile, tol: float = NEWTON_TOL) -> Profile:
    """Stationary SAR film near ``init`` by damped Newton."""
    grid = init.grid
    h = grid.h

    def full(x):
        u = np.zeros(grid.n)
        u[1:-1] = x
        return u

    x, _, _ = damped_newton(
        lambda x: residual_values(full(x), h, sigma, lam),
        lambda x: jacobian_values(full(x), h, sigma, lam),
        init.values[1:-1],
        tol=tol,
    )
    return Profile(grid, full(x))


@dataclass
class ContinuationCurve:
    sigma: float
    branch: str
    model: str
    lambdas: list
    profiles: list
    converged: list
    residuals: list
    fold_lambda: float | None = None

    def at(self, lam: float) -> Profile:
        k = int(np.argmin(np.abs(np.asarray(self.lambdas) - lam)))
        if not math.isclose(self.lambdas[k], lam, rel_tol=1e-12, abs_tol=1e-15):
            raise KeyError(f"no continuation point at lambda = {lam}")
        return self.profiles[k]


class ContinuationStopped(NoConvergence):
    """Step halving exhausted; ``curve`` holds the points computed so far."""

    def __init__(self, message, curve, cause):
        super().__init__(message)
        self.curve = curve
        self.cause = cause


def continuation(solve, residual_max, start: Profile, lambda_max, steps, sigma, branch, model,
                 max_halvings=6, strict=True) -> ContinuationCurve:
    """Natural-parameter continuation in lambda with the previous solution as predictor.

    ``solve(lam, init)`` returns a Profile or raises; ``residual_max(lam, u)``
    reports the converged residual for the record.
    """
    curve = ContinuationCurve(sigma, branch, model, [0.0], [start], [True],
                              [residual_max(0.0, start)])
    targets = np.linspace(0.0, lambda_max, steps + 1)[1:]
    lam, u = 0.0, start
    for target in targets:
        while lam < target:
            dlam = target - lam
            for _ in range(max_halvings + 1):
                try:
                    trial = solve(lam + dlam, u)
                    break
                except (NoConvergence, SingularOperator, SingularGap) as exc:
                    err = exc
                    dlam *= 0.5
            else:
                curve.fold_lambda = lam
                if strict:
                    raise ContinuationStopped(
                        f"continuation stalled after lambda = {lam:.6g}: {err}", curve, err
                    ) from err
                return curve
            lam = lam + dlam if dlam < target - lam else float(target)
            u = trial
            curve.lambdas.append(lam)
            curve.profiles.append(u)
            curve.converged.append(True)
            curve.residuals.append(residual_max(lam, u))
    return curve


def branch_catenoid(sigma: float, branch: str, grid: Grid) -> Profile:
    return catenoid_profile(solve_branches(sigma).c(branch), grid)


def continue_in_lambda(sigma: float, branch: str, lambda_max: float, steps: int,
                       grid: Grid | None = None, strict: bool = True) -> ContinuationCurve:
    grid = grid or Grid(401)
    start = branch_catenoid(sigma, branch, grid)
    h = grid.h

    def res_max(lam, u):
        return float(np.max(np.abs(residual_values(u.values, h, sigma, lam))))

    return continuation(
        lambda lam, init: solve_stationary(sigma, lam, init),
        res_max, start, lambda_max, steps, sigma, branch.lower(), "sar", strict=strict,
    )
