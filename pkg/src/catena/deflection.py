"""Direction of deflection of the stationary branches under a small voltage.

The first-order response of a branch to lambda is the sensitivity
w = -DF(u0)^{-1} g(u0).  On the outer catenoid DF has a negative spectrum and w
is positive (outward deflection).  On the inner catenoid DF has one positive
eigenvalue; whether w is negative or changes sign twice is decided by the sign of
the integral of g_sar against phi(z) = cosh(c z) - c z sinh(c z), c = c_in.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import CriterionViolated, NotBracketed
from .geometry import Grid, Profile, catenoid_profile, sigma_crit, solve_branches, solve_c_crit
from .sar import ForceField, df_operator, gsar

ALL_POSITIVE = "AllPositive"
ALL_NEGATIVE = "AllNegative"
TWO_SIGN_CHANGES = "TwoSignChanges"
MIXED = "Mixed"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CATENA_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map, threaded when CATENA_THREADS > 1."""
    items = list(items)
    workers = min(worker_count(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sign_changes(z: np.ndarray, d: np.ndarray, tol: float = 1e-10) -> list:
    """Locations of strict sign changes of samples d(z), refined on a cubic spline."""
    nz = np.flatnonzero(d != 0.0)
    if len(nz) < 2:
        return []
    spline = None
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        if np.sign(d[a]) == np.sign(d[b]):
            continue
        if spline is None:
            spline = CubicSpline(z, d)
        try:
            out.append(brentq(spline, z[a], z[b], xtol=tol))
        except ValueError:
            # spline wiggle with equal end signs; fall back to the chord
            out.append(z[a] - d[a] * (z[b] - z[a]) / (d[b] - d[a]))
    return out


@dataclass(frozen=True)
class SignPattern:
    kind: str
    r0: float | None = None
    crossings: tuple = ()


def classify_sign(z: np.ndarray, w: np.ndarray) -> SignPattern:
    """Sign pattern of a sensitivity on the interior nodes."""
    zi, wi = z[1:-1], w[1:-1]
    if np.all(wi > 0):
        return SignPattern(ALL_POSITIVE)
    if np.all(wi < 0):
        return SignPattern(ALL_NEGATIVE)
    cross = sign_changes(zi, wi)
    if len(cross) == 2 and cross[0] < 0 < cross[1] and wi[len(wi) // 2] < 0:
        r0 = 0.5 * (cross[1] - cross[0])
        return SignPattern(TWO_SIGN_CHANGES, r0, tuple(cross))
    return SignPattern(MIXED, None, tuple(cross))


def end_slopes(w: np.ndarray, h: float) -> tuple:
    left = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2 * h)
    right = (3.0 * w[-1] - 4.0 * w[-2] + w[-3]) / (2 * h)
    return float(left), float(right)


def sensitivity(u0: Profile, force: ForceField, sigma: float) -> np.ndarray:
    """Solve DF(u0) w = -g with w(+-1) = 0; returns w on all nodes."""
    op = df_operator(u0.values, u0.grid.h, sigma)
    w = np.zeros(u0.grid.n)
    w[1:-1] = op.solve(-force.values[1:-1])
    return w


@dataclass(frozen=True)
class PhiSamples:
    z: np.ndarray
    values: np.ndarray
    ode_residual: float
    zeros: tuple


def phi_exact(z, c):
    return np.cosh(c * z) - c * z * np.sinh(c * z)


def phi(c_in: float, grid: Grid) -> PhiSamples:
    """Samples of phi, the discrete residual of its ODE, and its two zeros."""
    c_crit = solve_c_crit()
    if not c_in > c_crit:
        raise ValueError("phi has interior zeros only for c_in > c_crit")
    z, h = grid.nodes, grid.h
    v = phi_exact(z, c_in)
    p = 1.0 / np.cosh(c_in * 0.5 * (z[:-1] + z[1:])) ** 2
    flux = p * np.diff(v) / h
    ode = -np.diff(flux) / h - c_in**2 * v[1:-1] / np.cosh(c_in * z[1:-1]) ** 2
    root = brentq(lambda s: phi_exact(s, c_in), 0.0, 1.0, xtol=1e-15)
    return PhiSamples(z, v, float(np.max(np.abs(ode))), (-root, root))


def gsar_inner_closed(z, c):
    """g_sar evaluated on the inner catenoid in closed form."""
    cz = np.cosh(c * z)
    return math.cosh(c) ** 2 / cz / np.log(2.0 * math.cosh(c) / cz) ** 2


def _i1_integrand(s, c):
    return (1.0 - s * math.tanh(s)) / math.log(2.0 * math.cosh(c) / math.cosh(s)) ** 2


@dataclass(frozen=True)
class CriterionIntegral:
    sigma: float
    c_in: float
    full: float
    I1: float
    identity_defect: float


def i1(sigma: float) -> float:
    c = solve_branches(sigma).c_in
    return quad(_i1_integrand, 0.0, c, args=(c,), epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def criterion_integral(sigma: float, n_quad: int = 4001) -> CriterionIntegral:
    """Integral of g_sar * phi over [-1, 1] and the reduced integral I1.

    The full integral uses composite Simpson on the original variable, I1 uses
    adaptive quadrature on the substituted form; they agree through the factor
    2 cosh^2(c) / c.
    """
    c = solve_branches(sigma).c_in
    z = np.linspace(-1.0, 1.0, n_quad)
    full = float(simpson(gsar_inner_closed(z, c) * phi_exact(z, c), x=z))
    I1 = i1(sigma)
    defect = full / (2.0 * math.cosh(c) ** 2 / c) - I1
    return CriterionIntegral(sigma, c, full, I1, defect)


def i4_integrand(s):
    return 1.0 - s * np.tanh(s)


def i4(sigma: float) -> float:
    c = solve_branches(sigma).c_in
    return quad(lambda s: 1.0 - s * math.tanh(s), 0.0, c, epsabs=1e-13, epsrel=1e-12)[0]


def i4_sign_change() -> float:
    """Zero of the I4 integrand 1 - z tanh z (coincides with c_crit)."""
    return brentq(lambda s: 1.0 - s * math.tanh(s), 0.5, 2.0, xtol=1e-15)


@dataclass(frozen=True)
class Thresholds:
    sigma_star_est: float
    sigma_upper_star_est: float
    table: tuple  # rows (sigma, I1, I4)


def _first_root(fn, sigmas, values):
    for k in range(len(sigmas) - 1):
        if values[k] * values[k + 1] < 0:
            return brentq(fn, sigmas[k], sigmas[k + 1], xtol=1e-13, rtol=1e-14)
        if values[k + 1] == 0.0:
            return float(sigmas[k + 1])
    return None


def find_sigma_thresholds(samples: int = 200, sigma_max: float = 50.0) -> Thresholds:
    """Empirical zero of I1 (lower boundary) and zero of I4 (certified bound).

    The scan uses ``samples`` geometrically spaced sigma in (sigma_crit, sigma_max].
    """
    sc = sigma_crit()
    sigmas = sc * (sigma_max / sc) ** (np.arange(1, samples + 1) / samples)
    rows = parallel_map(lambda s: (float(s), i1(s), i4(s)), sigmas)
    I1 = np.array([r[1] for r in rows])
    I4 = np.array([r[2] for r in rows])
    s_lo = _first_root(i1, sigmas, I1)
    s_hi = _first_root(i4, sigmas, I4)
    if s_lo is None or s_hi is None:
        raise NotBracketed(f"no sign change of I1/I4 in (sigma_crit, {sigma_max}]")
    return Thresholds(float(s_lo), float(s_hi), tuple(rows))


@dataclass(frozen=True)
class IntersectionReport:
    crossings: tuple
    count: int


def intersections(u_a: Profile, u_b: Profile) -> IntersectionReport:
    if u_a.grid != u_b.grid:
        raise ValueError("profiles live on different grids")
    z = u_a.grid.nodes
    d = u_a.values - u_b.values
    cross = sign_changes(z[1:-1], d[1:-1])
    return IntersectionReport(tuple(float(c) for c in cross), len(cross))


@dataclass(frozen=True)
class DeflectionReport:
    sigma: float
    branch: str
    model: str
    z: np.ndarray
    sensitivity: np.ndarray
    sign_pattern: SignPattern
    end_slopes: tuple
    criterion_integral: float | None = None
    I1: float | None = None
    I4: float | None = None


def deflect(sigma: float, branch: str, model: str = "sar", grid: Grid | None = None,
            n_eta: int | None = None) -> DeflectionReport:
    """Sensitivity of the branch at lambda = 0 and its sign pattern."""
    grid = grid or Grid(401)
    branch, model = branch.lower(), model.lower()
    u0 = catenoid_profile(solve_branches(sigma).c(branch), grid)
    if model == "sar":
        force = gsar(u0, sigma)
    elif model == "fbp":
        from .fbp import electrostatic_force, solve_potential

        force = electrostatic_force(u0, solve_potential(u0, sigma, n_eta), sigma)
    else:
        raise ValueError(f"unknown model {model!r}")
    w = sensitivity(u0, force, sigma)
    pattern = classify_sign(grid.nodes, w)
    extra = {}
    if branch == "inner":
        ci = criterion_integral(sigma)
        extra = dict(criterion_integral=ci.full, I1=ci.I1, I4=i4(sigma))
    return DeflectionReport(sigma, branch, model, grid.nodes, w, pattern,
                            end_slopes(w, grid.h), **extra)


@dataclass(frozen=True)
class AntimaxReport:
    sigma: float
    integral: float
    pattern: SignPattern
    end_slopes: tuple
    r0_slopes: tuple | None
    lagrange_lhs: float
    lagrange_rhs: float
    lagrange_rel_error: float
    consistent: bool


def _inner_sensitivity(sigma, grid):
    u0 = catenoid_profile(solve_branches(sigma).c_in, grid)
    return sensitivity(u0, gsar(u0, sigma), sigma)


def antimax_crossvalidate(sigma: float, grid: Grid | None = None, strict: bool = True) -> AntimaxReport:
    """Check the anti-maximum implication and the Lagrange identity at one sigma.

    The integral side is pure quadrature of closed forms; the pattern side is the
    finite-difference sensitivity.  The boundary slope entering the Lagrange
    identity is Richardson-extrapolated from the grid and its refinement.
    """
    grid = grid or Grid(401)
    c = solve_branches(sigma).c_in
    integral = criterion_integral(sigma).full
    w = _inner_sensitivity(sigma, grid)
    pattern = classify_sign(grid.nodes, w)
    slopes = end_slopes(w, grid.h)

    fine = grid.refined()
    slope_fine = end_slopes(_inner_sensitivity(sigma, fine), fine.h)[1]
    slope_right = (4.0 * slope_fine - slopes[1]) / 3.0
    lhs = phi_exact(1.0, c) * slope_right / math.cosh(c) ** 2
    rhs = -integral / (2.0 * sigma**2)
    rel = abs(lhs - rhs) / abs(rhs)

    r0_slopes = None
    if pattern.kind == TWO_SIGN_CHANGES:
        spline = CubicSpline(grid.nodes, w).derivative()
        r0_slopes = (float(spline(pattern.crossings[0])), float(spline(pattern.crossings[1])))

    if integral > 0:
        ok = pattern.kind == ALL_NEGATIVE and slopes[0] < 0 < slopes[1]
    elif integral < 0:
        ok = (pattern.kind == TWO_SIGN_CHANGES and slopes[0] > 0 > slopes[1]
              and r0_slopes[0] < 0 < r0_slopes[1])
    else:
        ok = True
    report = AntimaxReport(sigma, integral, pattern, slopes, r0_slopes, lhs, rhs, rel, ok)
    if strict and not ok:
        raise CriterionViolated(
            f"sigma = {sigma:g}: integral {integral:+.3e} but pattern {pattern.kind}"
        )
    return report
