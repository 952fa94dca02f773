"""Acceptance checks, shared by ``catena verify`` and the test suite.

Each check returns a CheckResult with its scalars and the grids/tolerances they
were computed with.  Wall-clock budgets are reported separately from the
numerical verdict so that summaries stay reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import deflection as dfl
from .dynamics import ModelParams, evolve, fit_decay_rate, leading_eigenfunction, perturbed
from .fbp import continue_in_lambda_fbp, fbp_force_values, solve_stationary_fbp
from .geometry import Grid, sigma_crit, solve_branches, solve_c_crit
from .report import dumps
from .sar import branch_catenoid, continue_in_lambda, gsar, solve_stationary
from .shooting import (
    bisection_tolerance, closed_form_D0, eigencurve, eigencurve_slope, eigenvalue, shoot,
)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    metrics: dict
    provenance: dict
    budget: float
    seconds: float = 0.0
    detail: str = ""

    @property
    def within_budget(self) -> bool:
        return self.seconds <= self.budget

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "metrics": {k: {"value": v, "provenance": self.provenance}
                        for k, v in self.metrics.items()},
            "detail": self.detail,
        }


@dataclass
class Context:
    """Results shared between checks (continuation curves are expensive)."""

    curves: dict = field(default_factory=dict)
    # checks whose budget covers only part of their work record that time here
    timings: dict = field(default_factory=dict)

    def curve(self, model, sigma, branch, lambda_max, steps, n):
        key = (model, sigma, branch, lambda_max, steps, n)
        if key not in self.curves:
            fn = continue_in_lambda if model == "sar" else continue_in_lambda_fbp
            self.curves[key] = fn(sigma, branch, lambda_max, steps, Grid(n))
        return self.curves[key]


SAR_N = 401
FBP_N = 201
SHOOT_N = 801


def _symmetry(p):
    return p.symmetry_defect()


def check_critical(ctx):
    t0 = time.perf_counter()
    c = solve_c_crit.__wrapped__()
    ctx.timings[1] = time.perf_counter() - t0
    s = math.cosh(c) / c
    ok = abs(c - 1.19967864) <= 1e-6 and abs(s - 1.50888) <= 1e-4
    return ok, {"c_crit": c, "sigma_crit": s}, {"method": "bisection+newton"}, ""


def check_shooting(ctx):
    g = Grid(SHOOT_N)
    metrics = {}
    for c in (0.6, 1.0, solve_c_crit(), 2.0, 3.0):
        metrics[f"D_error_c={c:.10g}"] = abs(shoot(c, 0.0, g).D - closed_form_D0(c))
    ok = max(metrics.values()) <= 1e-8
    return ok, metrics, {"shoot_n": SHOOT_N, "tol": 1e-8}, ""


def check_eigencurve(ctx):
    g = Grid(SHOOT_N)
    curve = eigencurve(0.5, 2.5, 0, 21, g)
    zeros = curve.zeros
    metrics = {"zero_count": len(zeros)}
    ok = len(zeros) == 1
    if zeros:
        metrics["zero"] = zeros[0]
        metrics["zero_error"] = abs(zeros[0] - solve_c_crit())
        metrics["slope_at_zero"] = eigencurve_slope(zeros[0], g)
        ok = ok and metrics["zero_error"] <= 1e-5 and metrics["slope_at_zero"] > 0
    return ok, metrics, {"shoot_n": SHOOT_N, "samples": 21, "c_xtol": 1e-13, "dc": 1e-3}, ""


def check_sign_table(ctx):
    g = Grid(SHOOT_N)
    metrics = {}
    ok = True
    for s in (1.6, 2.0, 3.0, 5.0):
        b = solve_branches(s)
        pairs = {
            "mu0_out": eigenvalue(b.c_out, 0, g),
            "mu0_in": eigenvalue(b.c_in, 0, g),
            "mu1_in": eigenvalue(b.c_in, 1, g),
        }
        for key, e in pairs.items():
            metrics[f"{key}@sigma={s:g}"] = e.mu
            ok &= abs(e.mu) > 10 * bisection_tolerance(e.mu)
            ok &= e.nodes == e.index and e.parity_defect() <= 1e-8
        ok &= pairs["mu0_out"].mu < 0 < pairs["mu0_in"].mu and pairs["mu1_in"].mu < 0
    return bool(ok), metrics, {"shoot_n": SHOOT_N, "mu_xtol": 1e-15, "mu_rtol": 1e-15}, ""


FORCE_GRIDS = ((21, 257), (41, 513), (81, 1025))


def check_force(ctx):
    metrics = {}
    ok = True
    for u0 in (-0.5, 0.0, 0.5):
        exact = 1.0 / ((u0 + 1.0) ** 2 * math.log(2.0 / (u0 + 1.0)) ** 2)
        errs, hs = [], []
        for nz, ne in FORCE_GRIDS:
            u = np.full(nz, u0)
            g = fbp_force_values(Grid(nz), u, 2.0, ne)
            errs.append(float(np.max(np.abs(g - exact))))
            hs.append(1.0 / (ne - 1))
        order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
        metrics[f"order@u0={u0:g}"] = order
        metrics[f"finest_error@u0={u0:g}"] = errs[-1]
        ok = ok and order >= 1.8 and errs[-1] <= 1e-4
    return ok, metrics, {"grids": [list(p) for p in FORCE_GRIDS], "sigma": 2.0}, ""


def _force(model, u, sigma):
    if model == "sar":
        return gsar(u, sigma)
    from .fbp import electrostatic_force, solve_potential

    return electrostatic_force(u, solve_potential(u, sigma), sigma)


def _linear_prediction(model, sigma, branch, n):
    """||u^lam - u^0 - lam w|| / lam^2 for lam halving from 0.02."""
    g = Grid(n)
    u0 = branch_catenoid(sigma, branch, g)
    w = dfl.sensitivity(u0, _force(model, u0, sigma), sigma)
    out = []
    init = u0
    for lam in (0.005, 0.01, 0.02):
        if model == "sar":
            ul = solve_stationary(sigma, lam, init)
        else:
            ul = solve_stationary_fbp(sigma, lam, init)
        init = ul
        out.append(float(np.max(np.abs(ul.values - u0.values - lam * w))) / lam**2)
    return out[::-1]


def check_continuation(ctx):
    metrics = {}
    ok = True
    runs = (("sar", SAR_N, 1e-10), ("fbp", FBP_N, 1e-8))
    for model, n, tol in runs:
        for branch in ("outer", "inner"):
            cv = ctx.curve(model, 2.0, branch, 0.05, 10, n)
            rmax = max(cv.residuals[1:])
            sym = max(_symmetry(p) for p in cv.profiles[1:])
            tag = f"{model}_{branch}"
            metrics[f"points_{tag}"] = len(cv.lambdas)
            metrics[f"max_residual_{tag}"] = rmax
            metrics[f"max_symmetry_{tag}"] = sym
            ok = ok and len(cv.lambdas) == 11 and rmax <= tol and sym <= 1e-7
    for model, n, _ in runs:
        for branch in ("outer", "inner"):
            q = _linear_prediction(model, 2.0, branch, n)
            for lam, v in zip((0.02, 0.01, 0.005), q):
                metrics[f"lin_pred_{model}_{branch}@lambda={lam:g}"] = v
            ratios = [q[k + 1] / q[k] for k in range(len(q) - 1)]
            ok = ok and all(0.5 <= r <= 2.0 for r in ratios)
    prov = {"sar_n": SAR_N, "fbp_n": FBP_N, "sar_tol": 1e-10, "fbp_tol": 1e-8, "sigma": 2.0}
    return ok, metrics, prov, ""


def check_outward(ctx):
    metrics = {}
    ok = True
    for model, n in (("sar", SAR_N), ("fbp", FBP_N)):
        cv = ctx.curve(model, 2.0, "outer", 0.05, 10, n)
        worst = math.inf
        crossings = 0
        for j in range(1, len(cv.profiles)):
            for i in range(j):
                d = cv.profiles[j].values - cv.profiles[i].values
                worst = min(worst, float(np.min(d[1:-1])))
                crossings += dfl.intersections(cv.profiles[j], cv.profiles[i]).count
        metrics[f"min_gap_{model}"] = worst
        metrics[f"crossings_{model}"] = crossings
        ok = ok and worst > 0 and crossings == 0
    return ok, metrics, {"sar_n": SAR_N, "fbp_n": FBP_N, "sigma": 2.0, "lambda_max": 0.05}, ""


def check_inward(ctx):
    metrics = {}
    g = Grid(SAR_N)
    cv = ctx.curve("sar", 1.52, "inner", 0.01, 10, SAR_N)
    gap = max(float(np.max((p.values - cv.profiles[0].values)[1:-1])) for p in cv.profiles[1:])
    counts = [dfl.intersections(p, cv.profiles[0]).count for p in cv.profiles[1:]]
    metrics["max_u_lambda_minus_u0@sigma=1.52"] = gap
    metrics["crossings@sigma=1.52"] = sum(counts)
    ok = gap < 0 and sum(counts) == 0

    s_hi = max(10.0, dfl.find_sigma_thresholds().sigma_upper_star_est)
    report = dfl.deflect(s_hi, "inner", "sar", g)
    r0 = report.sign_pattern.r0
    metrics["sigma_hi"] = s_hi
    metrics["r0"] = r0 if r0 is not None else math.nan
    cv = ctx.curve("sar", s_hi, "inner", 0.002, 2, SAR_N)
    for lam, p in zip(cv.lambdas[1:], cv.profiles[1:]):
        ir = dfl.intersections(p, cv.profiles[0])
        metrics[f"crossings@lambda={lam:g}"] = ir.count
        ok = ok and ir.count == 2 and r0 is not None
        if ir.count == 2 and r0 is not None:
            dev = max(abs(ir.crossings[0] + r0), abs(ir.crossings[1] - r0))
            metrics[f"crossing_vs_r0@lambda={lam:g}"] = dev
            ok = ok and dev <= 2 * g.h
    return ok, metrics, {"sar_n": SAR_N, "two_h": 2 * g.h}, ""


def sweep_sigmas(count=20, top=20.0):
    """Cubically clustered toward sigma_crit so both sign regimes are sampled."""
    sc = sigma_crit()
    k = np.arange(1, count + 1) / count
    return (sc + (top - sc) * k**3).tolist()


def check_antimax(ctx):
    sigmas = sweep_sigmas()
    reports = dfl.parallel_map(lambda s: dfl.antimax_crossvalidate(s, strict=False), sigmas)
    named = [dfl.antimax_crossvalidate(s, strict=False) for s in (1.52, 2.0, 5.0, 10.0)]
    violations = sum(not r.consistent for r in reports + named)
    lag = max(r.lagrange_rel_error for r in reports + named)
    kinds = [r.pattern.kind for r in reports]
    metrics = {
        "violations": violations,
        "max_lagrange_rel_error": lag,
        "all_negative_count": kinds.count(dfl.ALL_NEGATIVE),
        "two_sign_changes_count": kinds.count(dfl.TWO_SIGN_CHANGES),
    }
    ok = violations == 0 and lag <= 1e-4
    return ok, metrics, {"grid_n": SAR_N, "sigmas": len(sigmas), "simpson_n": 4001}, ""


def check_thresholds(ctx):
    th = dfl.find_sigma_thresholds()
    sc = sigma_crit()
    c_sign = dfl.i4_sign_change()
    metrics = {
        "sigma_star_est": th.sigma_star_est,
        "sigma_upper_star_est": th.sigma_upper_star_est,
        "I1_at_star": dfl.i1(th.sigma_star_est),
        "I1@sigma_crit+0.01": dfl.i1(sc + 0.01),
        "I4_sign_change": c_sign,
        "I4_sign_change_error": abs(c_sign - solve_c_crit()),
    }
    ok = (th.sigma_star_est > sc and th.sigma_upper_star_est >= th.sigma_star_est
          and metrics["I1@sigma_crit+0.01"] > 0 and metrics["I4_sign_change_error"] <= 1e-8
          and abs(metrics["I1_at_star"]) <= 1e-8)
    return ok, metrics, {"scan": 200, "sigma_max": 50.0, "quad_epsabs": 1e-13}, ""


DYN_N = 201


def stability_run(sigma, lam, branch, n=DYN_N, dt=1e-3, T=5.0):
    g = Grid(n)
    params = ModelParams(sigma, lam)
    ref = solve_stationary(sigma, lam, branch_catenoid(sigma, branch, g))
    direction = leading_eigenfunction(ref, params)
    if branch == "outer":
        traj = evolve(perturbed(ref, direction, 1e-3), T, dt, params, ref, stop_below=1e-9)
    else:
        traj = evolve(perturbed(ref, direction, 1e-4), T, dt, params, ref, stop_radius=1e-2)
    return traj, fit_decay_rate(traj)


def check_dynamics(ctx):
    sigma = 2.0
    metrics = {}
    ok = True
    b = solve_branches(sigma)
    mu = {br: sigma**2 * eigenvalue(b.c(br), 0, Grid(SHOOT_N)).mu for br in ("outer", "inner")}
    for lam in (0.0, 0.01):
        for branch in ("outer", "inner"):
            traj, rep = stability_run(sigma, lam, branch)
            tag = f"{branch}@lambda={lam:g}"
            metrics[f"rate_{tag}"] = rep.fitted_rate
            metrics[f"spectral_bound_{tag}"] = rep.spectral_bound
            if branch == "outer":
                rel = abs(rep.fitted_rate - rep.spectral_bound) / abs(rep.spectral_bound)
                metrics[f"rel_to_bound_{tag}"] = rel
                ok = ok and rep.verdict == "Stable" and rel <= 0.15
            else:
                metrics[f"growth_{tag}"] = traj.growth_factor()
                ok = ok and rep.verdict == "Unstable" and traj.growth_factor() >= 10
            if lam == 0:
                rel = abs(rep.fitted_rate - mu[branch]) / abs(mu[branch])
                metrics[f"rel_to_shooting_{tag}"] = rel
                ok = ok and rel <= 0.10
    return ok, metrics, {"grid_n": DYN_N, "dt": 1e-3, "shoot_n": SHOOT_N, "sigma": sigma}, ""


DETERMINISM_CHECKS = (1, 2, 10)


def check_determinism(ctx):
    first = dumps(summary_dict(run_checks(DETERMINISM_CHECKS)))
    second = dumps(summary_dict(run_checks(DETERMINISM_CHECKS)))
    ok = first == second
    return ok, {"identical": ok, "bytes": len(first)}, {"checks": list(DETERMINISM_CHECKS)}, ""


CHECKS = {
    1: ("critical values", check_critical, 0.001),
    2: ("shooting oracle", check_shooting, 1.0),
    3: ("eigencurve zero", check_eigencurve, 5.0),
    4: ("sign table", check_sign_table, 10.0),
    5: ("force consistency", check_force, 10.0),
    6: ("branch continuation", check_continuation, 60.0),
    7: ("outward deflection", check_outward, 10.0),
    8: ("inward deflection and intersections", check_inward, 20.0),
    9: ("anti-maximum cross-validation", check_antimax, 30.0),
    10: ("thresholds", check_thresholds, 10.0),
    11: ("dynamics dichotomy", check_dynamics, 120.0),
    12: ("determinism", check_determinism, 60.0),
}


def run_check(number: int, ctx: Context | None = None) -> CheckResult:
    name, fn, budget = CHECKS[number]
    ctx = ctx or Context()
    t0 = time.perf_counter()
    try:
        ok, metrics, prov, detail = fn(ctx)
    except Exception as exc:  # report as a failed check, not a crash
        ok, metrics, prov, detail = False, {}, {}, f"{type(exc).__name__}: {exc}"
    elapsed = ctx.timings.pop(number, time.perf_counter() - t0)
    return CheckResult(number, name, bool(ok), metrics, prov, budget, elapsed, detail)


def run_checks(numbers=None, ctx: Context | None = None) -> list:
    ctx = ctx or Context()
    numbers = sorted(numbers or CHECKS)
    return [run_check(k, ctx) for k in numbers]


def summary_dict(results) -> dict:
    return {f"check_{r.number:02d}": r.as_dict() for r in results}


def format_table(results) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed and r.within_budget else "FAIL"
        note = "" if r.within_budget else f" (over budget {r.budget:g}s)"
        extra = f" {r.detail}" if r.detail else ""
        lines.append(f"{status}  {r.number:2d}  {r.name:<38s} {r.seconds:8.2f}s{note}{extra}")
    return "\n".join(lines)
