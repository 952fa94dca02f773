"""Command-line entry point.

Each command writes ``summary.json`` (scalars with their grid/tolerance
provenance) and one or more ``*.tsv`` tables into the output directory.  With
``--figures`` the same data is also rendered to PNG files.

Exit codes: 0 success, 2 invalid configuration, 3 domain error (no catenoid,
film touching the axis or cylinder), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import deflection as dfl
from .config import COMMANDS, RunConfig, as_dict, build_config, read_config_file
from .errors import CatenaError, InsufficientDecay, InvalidConfig
from .geometry import Grid, catenoid_profile, sigma_crit, solve_branches, solve_c_crit, surface_energy
from .report import Summary, write_tsv

log = logging.getLogger("catena")

# keys that only control where and how output is written
_OUTPUT_KEYS = ("output", "figures")


class Run:
    """Output directory, summary and table bookkeeping for one command."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.output)
        echo = {k: v for k, v in as_dict(cfg).items() if k not in _OUTPUT_KEYS}
        self.summary = Summary(cfg.command, echo)
        self.figures = []

    def table(self, name: str, columns: dict) -> None:
        write_tsv(self.out / name, columns)
        self.summary.tables.append(name)

    def figure(self, fn, name: str, *args, **kwargs) -> None:
        if self.cfg.figures:
            from . import plotting

            getattr(plotting, fn)(self.out / name, *args, **kwargs)
            self.figures.append(name)

    def finish(self) -> None:
        if self.figures:
            self.summary.config["figures"] = sorted(self.figures)
        self.summary.write(self.out)


def cmd_catenoid(run: Run) -> int:
    cfg = run.cfg
    b = solve_branches(cfg.sigma)
    g = Grid(cfg.grid_n)
    u_out, u_in = catenoid_profile(b.c_out, g), catenoid_profile(b.c_in, g)
    prov = {"c_xtol": 4 * np.finfo(float).eps}
    run.summary.add_all({"c_out": b.c_out, "c_in": b.c_in, "c_crit": b.c_crit,
                         "sigma_crit": b.sigma_crit}, prov)
    run.summary.add_all({
        "energy_out": surface_energy(u_out, cfg.sigma),
        "energy_in": surface_energy(u_in, cfg.sigma),
        "u_center_out": float(u_out.values[g.n // 2]),
        "u_center_in": float(u_in.values[g.n // 2]),
    }, {"grid_n": g.n, "quadrature": "simpson"})
    run.table("profiles.tsv", {"z": g.nodes, "u_out": u_out.values, "u_in": u_in.values})
    run.figure("line_figure", "profiles.png", g.nodes,
               {"outer": u_out.values, "inner": u_in.values}, "z", "u",
               title=f"catenoids, sigma = {cfg.sigma:g}")
    return 0


def cmd_eigencurve(run: Run) -> int:
    from .shooting import eigencurve, eigencurve_slope, eigenvalue

    cfg = run.cfg
    g = Grid(cfg.shoot_n)
    curve = eigencurve(cfg.c_lo, cfg.c_hi, cfg.index, cfg.samples, g)
    prov = {"shoot_n": g.n, "mu_xtol": 1e-15, "samples": cfg.samples}
    run.summary.add("zeros", list(curve.zeros), dict(prov, c_xtol=1e-13))
    run.summary.add("zero_slopes", [eigencurve_slope(z, g, n=cfg.index) for z in curve.zeros],
                    dict(prov, dc=1e-3))
    run.summary.add("c_crit", solve_c_crit(), {"c_xtol": 4 * np.finfo(float).eps})
    if cfg.sigma >= sigma_crit():
        b = solve_branches(cfg.sigma)
        run.summary.add_all({
            "mu0_out": eigenvalue(b.c_out, 0, g).mu,
            "mu0_in": eigenvalue(b.c_in, 0, g).mu,
            "mu1_in": eigenvalue(b.c_in, 1, g).mu,
        }, dict(prov, sigma=cfg.sigma))
    run.table("eigencurve.tsv", {"c": curve.c, "mu": curve.mu})
    run.figure("line_figure", "eigencurve.png", curve.c, {f"mu_{cfg.index}": curve.mu},
               "c", "mu", hline=0.0)
    return 0


def _continue(cfg: RunConfig):
    from .fbp import continue_in_lambda_fbp
    from .sar import continue_in_lambda

    g = Grid(cfg.grid_n)
    if cfg.model == "sar":
        return continue_in_lambda(cfg.sigma, cfg.branch, cfg.lambda_max, cfg.steps, g)
    return continue_in_lambda_fbp(cfg.sigma, cfg.branch, cfg.lambda_max, cfg.steps, g, cfg.n_eta)


def cmd_continue(run: Run) -> int:
    from .sar import ContinuationStopped

    cfg = run.cfg
    status = 0
    try:
        curve = _continue(cfg)
    except ContinuationStopped as exc:
        log.error("%s", exc)
        curve, status = exc.curve, exc.exit_code
    g = curve.profiles[0].grid
    tol = cfg.tol if cfg.model == "sar" else cfg.fbp_tol
    prov = cfg.provenance(tol=tol, model=cfg.model, n_eta=cfg.n_eta)
    run.summary.add_all({
        "fold_lambda": curve.fold_lambda,
        "last_lambda": curve.lambdas[-1],
        "points": len(curve.lambdas),
        "max_residual": max(curve.residuals),
        "max_symmetry_defect": max(p.symmetry_defect() for p in curve.profiles),
    }, prov)
    centers = [float(p.values[g.n // 2]) for p in curve.profiles]
    run.table("continuation.tsv", {"lambda": curve.lambdas, "u_center": centers,
                                   "residual": curve.residuals})
    cols = {"z": g.nodes}
    for lam, p in zip(curve.lambdas, curve.profiles):
        cols[f"u@lambda={lam:.6g}"] = p.values
    run.table("profiles.tsv", cols)
    run.figure("line_figure", "continuation.png", np.asarray(curve.lambdas),
               {"u(0)": centers}, "lambda", "u(0)")
    return status


def cmd_deflect(run: Run) -> int:
    cfg = run.cfg
    g = Grid(cfg.grid_n)
    rep = dfl.deflect(cfg.sigma, cfg.branch, cfg.model, g, cfg.n_eta)
    prov = cfg.provenance(model=cfg.model, n_eta=cfg.n_eta)
    pat = rep.sign_pattern
    run.summary.add_all({
        "sign_pattern": pat.kind,
        "r0": pat.r0,
        "sign_changes": list(pat.crossings),
        "end_slope_left": rep.end_slopes[0],
        "end_slope_right": rep.end_slopes[1],
    }, prov)
    if rep.I1 is not None:
        run.summary.add_all({"criterion_integral": rep.criterion_integral, "I1": rep.I1,
                             "I4": rep.I4}, {"simpson_n": 4001, "quad_epsabs": 1e-13})
    u0 = catenoid_profile(solve_branches(cfg.sigma).c(cfg.branch), g)
    run.table("sensitivity.tsv", {"z": g.nodes, "sensitivity": rep.sensitivity,
                                  "u0": u0.values})
    run.figure("line_figure", "sensitivity.png", g.nodes, {"d u / d lambda": rep.sensitivity},
               "z", "sensitivity", title=f"{cfg.branch} branch, sigma = {cfg.sigma:g}",
               hline=0.0)
    return 0


def cmd_thresholds(run: Run) -> int:
    th = dfl.find_sigma_thresholds()
    prov = {"scan": 200, "sigma_max": 50.0, "quad_epsabs": 1e-13, "brentq_xtol": 1e-13}
    run.summary.add_all({
        "sigma_star_est": th.sigma_star_est,
        "sigma_upper_star_est": th.sigma_upper_star_est,
        "sigma_crit": sigma_crit(),
    }, prov)
    table = np.array(th.table)
    run.table("thresholds.tsv", {"sigma": table[:, 0], "I1": table[:, 1], "I4": table[:, 2]})
    run.figure("line_figure", "thresholds.png", table[:, 0],
               {"I1": table[:, 1], "I4": table[:, 2]}, "sigma", "integral", hline=0.0)
    return 0


def random_direction(grid: Grid, seed: int, modes: int = 8) -> np.ndarray:
    """Smooth random perturbation vanishing at the ends, max-norm 1."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    coef = rng.standard_normal(modes) / k**2
    v = np.sin(np.outer(np.pi * (grid.nodes + 1.0) / 2.0, k)) @ coef
    v[0] = v[-1] = 0.0
    return v / np.max(np.abs(v))


def cmd_simulate(run: Run) -> int:
    from .dynamics import ModelParams, evolve, fit_decay_rate, leading_eigenfunction, perturbed
    from .sar import branch_catenoid, solve_stationary

    cfg = run.cfg
    g = Grid(cfg.grid_n)
    params = ModelParams(cfg.sigma, cfg.lam, cfg.model, cfg.n_eta)
    start = branch_catenoid(cfg.sigma, cfg.branch, g)
    if cfg.model == "sar":
        ref = solve_stationary(cfg.sigma, cfg.lam, start, tol=cfg.tol)
    else:
        from .fbp import solve_stationary_fbp

        ref = solve_stationary_fbp(cfg.sigma, cfg.lam, start, cfg.n_eta, tol=cfg.fbp_tol)
    if cfg.perturbation == "eigen":
        # the SAR linearization supplies the direction for both models
        direction = leading_eigenfunction(ref, ModelParams(cfg.sigma, cfg.lam))
    else:
        direction = random_direction(g, cfg.seed)
    traj = evolve(perturbed(ref, direction, cfg.amplitude), cfg.T, cfg.dt, params, ref,
                  stop_radius=100 * cfg.amplitude, stop_below=1e-9)
    prov = cfg.provenance(dt=cfg.dt, T=cfg.T, model=cfg.model, seed=cfg.seed)
    run.summary.add_all({
        "event": None if traj.event is None else traj.event.kind,
        "event_time": None if traj.event is None else traj.event.t,
        "left_ball": traj.left_ball,
        "final_time": traj.times[-1],
        "growth_factor": traj.growth_factor(),
        "final_distance": traj.norms[-1],
    }, prov)
    try:
        rep = fit_decay_rate(traj)
        run.summary.add_all({"fitted_rate": rep.fitted_rate, "spectral_bound": rep.spectral_bound,
                             "verdict": rep.verdict}, prov)
    except InsufficientDecay as exc:
        log.warning("no rate fitted: %s", exc)
        run.summary.add("fitted_rate", None, dict(prov, reason=str(exc)))
    run.table("trajectory.tsv", {"t": traj.times, "distance": traj.norms})
    run.table("final_profile.tsv", {"z": g.nodes, "u": traj.profiles[-1].values,
                                    "reference": ref.values})
    run.figure("line_figure", "trajectory.png", np.asarray(traj.times),
               {"||u - u*||": traj.norms}, "t", "max-norm distance", logy=True)
    return 0


def cmd_potential(run: Run) -> int:
    from .fbp import force_values, solve_potential
    from .sar import gsar_values

    cfg = run.cfg
    g = Grid(cfg.grid_n)
    u = catenoid_profile(solve_branches(cfg.sigma).c(cfg.branch), g)
    pot = solve_potential(u, cfg.sigma, cfg.n_eta)
    gf = force_values(pot, g.h)
    gs = gsar_values(u.values, g.h, cfg.sigma)
    prov = cfg.provenance(n_eta=len(pot.eta), solve_tol=1e-10)
    run.summary.add_all({
        "solve_residual": pot.solve_residual,
        "symmetry_defect": pot.symmetry_defect(),
        "psi_min": float(pot.psi.min()),
        "psi_max": float(pot.psi.max()),
        "max_principle": bool(pot.psi.min() >= -1e-12 and pot.psi.max() <= 1 + 1e-12),
        "force_center": float(gf[g.n // 2]),
        "gsar_center": float(gs[g.n // 2]),
    }, prov)
    Z = np.broadcast_to(pot.z[:, None], pot.psi.shape)
    E = np.broadcast_to(pot.eta[None, :], pot.psi.shape)
    run.table("potential.tsv", {"z": Z.ravel(), "eta": E.ravel(), "r": pot.r.ravel(),
                                "psi": pot.psi.ravel()})
    run.table("force.tsv", {"z": g.nodes, "g_fbp": gf, "g_sar": gs})
    run.figure("field_figure", "potential.png", Z, pot.r, pot.psi,
               title=f"{cfg.branch} catenoid, sigma = {cfg.sigma:g}")
    run.figure("line_figure", "force.png", g.nodes, {"free boundary": gf, "small aspect": gs},
               "z", "force density")
    return 0


def parse_checks(text: str):
    if text.strip().lower() == "all":
        return None
    try:
        nums = sorted({int(s) for s in text.split(",") if s.strip()})
    except ValueError:
        raise InvalidConfig("checks", f"expected 'all' or a comma list, got {text!r}") from None
    from .verify import CHECKS

    bad = [n for n in nums if n not in CHECKS]
    if bad or not nums:
        raise InvalidConfig("checks", f"unknown check numbers {bad}")
    return nums


def cmd_verify(run: Run) -> int:
    from .verify import format_table, run_checks, summary_dict

    results = run_checks(parse_checks(run.cfg.checks))
    print(format_table(results))
    run.summary.results = summary_dict(results)
    run.table("verify.tsv", {"check": [r.number for r in results],
                             "passed": [int(r.passed) for r in results]})
    return 0 if all(r.passed for r in results) else 4


DISPATCH = {
    "catenoid": cmd_catenoid,
    "eigencurve": cmd_eigencurve,
    "continue": cmd_continue,
    "deflect": cmd_deflect,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "potential": cmd_potential,
    "verify": cmd_verify,
}

_FLAGS = {
    "sigma": (float, "aspect ratio"),
    "lam": (float, "voltage parameter lambda"),
    "lambda_max": (float, "end of the continuation range"),
    "steps": (int, "continuation steps"),
    "model": (str, "sar or fbp"),
    "branch": (str, "inner or outer"),
    "grid_n": (int, "nodes in z (odd)"),
    "n_eta": (int, "nodes across the gap (free boundary model)"),
    "shoot_n": (int, "shooting grid nodes (odd)"),
    "tol": (float, "SAR residual tolerance"),
    "fbp_tol": (float, "free boundary residual tolerance"),
    "c_lo": (float, "eigencurve start"),
    "c_hi": (float, "eigencurve end"),
    "samples": (int, "eigencurve samples"),
    "index": (int, "eigenvalue index"),
    "dt": (float, "time step"),
    "T": (float, "final time"),
    "amplitude": (float, "perturbation size"),
    "perturbation": (str, "eigen or random"),
    "seed": (int, "seed for random perturbations"),
    "checks": (str, "verify: 'all' or comma list of check numbers"),
    "output": (str, "output directory"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catena", description=__doc__.split("\n\n")[0])
    p.add_argument("command_pos", nargs="?", metavar="command", choices=COMMANDS + (None,),
                   help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--command", dest="command", default=None, choices=COMMANDS)
    p.add_argument("--config", default=None, help="flat 'key = value' file; flags override it")
    for key, (_, helptext) in _FLAGS.items():
        flag = "--lambda" if key == "lam" else "--" + key.replace("_", "-")
        # values are parsed by the config layer so bad input reports the key
        p.add_argument(flag, dest=key, default=None, help=helptext)
    p.add_argument("--figures", action="store_const", const=True, default=None,
                   help="also render PNG figures next to the tables")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None) -> tuple[RunConfig, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    flags = {k: getattr(args, k) for k in _FLAGS}
    flags["figures"] = args.figures
    command = args.command or args.command_pos
    if args.command and args.command_pos and args.command != args.command_pos:
        raise InvalidConfig("command", "positional command and --command disagree")
    flags["command"] = command
    file_values = read_config_file(args.config) if args.config else {}
    return build_config(file_values, flags), args


def run(cfg: RunConfig) -> int:
    r = Run(cfg)
    status = DISPATCH[cfg.command](r)
    r.finish()
    return status


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", level=logging.WARNING)
    try:
        cfg, args = parse_config(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        return run(cfg)
    except CatenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # input that passed validation but violates an operation's precondition
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
