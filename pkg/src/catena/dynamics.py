"""Time evolution of the film and empirical stability rates.

The film evolves by

    u_t = sigma d/dz arctan(sigma u_z) - 1/(u + 1) + lam g(u),   u(+-1) = 0,

with unit damping.  A first-order IMEX step treats the diffusion implicitly and
the reaction explicitly.  The implicit operator uses the secant coefficient
a = arctan(sigma s) / (sigma s) of the one-sided slope s, so that A(u) u equals
the discrete arctan flux difference exactly and stationary discrete films are
fixed points of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CeilingContact, InsufficientDecay, SingularGap, Touchdown
from .geometry import EPS_GAP, Profile
from .linalg import TridiagonalOperator, leading_mode, matrix_spectrum
from .sar import df_operator, gsar_values, jacobian_values

STABLE = "Stable"
UNSTABLE = "Unstable"


@dataclass(frozen=True)
class ModelParams:
    sigma: float
    lam: float = 0.0
    model: str = "sar"
    n_eta: int | None = None

    def __post_init__(self):
        if self.model not in ("sar", "fbp"):
            raise ValueError(f"unknown model {self.model!r}")


@dataclass(frozen=True)
class Event:
    kind: str  # Touchdown | CeilingContact
    t: float


def force_values(values: np.ndarray, h: float, params: ModelParams) -> np.ndarray:
    if params.model == "sar":
        return gsar_values(values, h, params.sigma)
    from .fbp import fbp_force_values
    from .geometry import Grid

    return fbp_force_values(Grid(len(values)), values, params.sigma, params.n_eta)


def secant_operator(values: np.ndarray, h: float, sigma: float) -> TridiagonalOperator:
    """Frozen-coefficient diffusion sigma^2 D-(a D+ .) with a = arctan(sigma s)/(sigma s)."""
    x = sigma * np.diff(values) / h
    a = np.ones_like(x)
    nz = x != 0
    a[nz] = np.arctan(x[nz]) / x[nz]
    k = sigma**2 / h**2
    return TridiagonalOperator(k * a[1:-1], -k * (a[:-1] + a[1:]), k * a[1:-1].copy())


def reaction_values(values: np.ndarray, h: float, params: ModelParams) -> np.ndarray:
    """Explicit part -1/(u + 1) + lam g(u) at interior nodes."""
    out = -1.0 / (values[1:-1] + 1.0)
    if params.lam != 0:
        out = out + params.lam * force_values(values, h, params)[1:-1]
    return out


def step(u: Profile, dt: float, params: ModelParams) -> Profile:
    """One IMEX step of size dt."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    h = u.grid.h
    v = u.values
    try:
        rhs = v[1:-1] + dt * reaction_values(v, h, params)
    except SingularGap as exc:
        raise Touchdown(str(exc)) from exc
    op = secant_operator(v, h, params.sigma).scaled(-dt).shifted(1.0)
    new = np.zeros(u.grid.n)
    new[1:-1] = op.solve(rhs)
    lo, hi = float(np.min(new)) + 1.0, float(np.max(new))
    if not np.all(np.isfinite(new)) or lo <= EPS_GAP:
        raise Touchdown(f"min(u + 1) = {lo:.3e}")
    if hi >= 1.0 - EPS_GAP:
        raise CeilingContact(f"max(u) = {hi:.6f}")
    return Profile(u.grid, new)


@dataclass
class Trajectory:
    times: list
    profiles: list
    norms: list
    reference: Profile
    params: ModelParams
    event: Event | None = None
    left_ball: bool = False

    def growth_factor(self) -> float:
        return max(self.norms) / self.norms[0]


def evolve(u0: Profile, T: float, dt: float, params: ModelParams, reference: Profile,
           stop_radius: float | None = None, stop_below: float | None = None,
           record_every: int = 1) -> Trajectory:
    """Step from t = 0 to T, recording the max-norm distance to ``reference``.

    The run ends early on touchdown or ceiling contact (recorded as the event),
    when the distance exceeds ``stop_radius``, or when it drops below
    ``stop_below``.
    """
    if u0.grid != reference.grid:
        raise ValueError("initial profile and reference live on different grids")
    ref = reference.values

    def dist(p):
        return float(np.max(np.abs(p.values - ref)))

    traj = Trajectory([0.0], [u0], [dist(u0)], reference, params)
    u, t = u0, 0.0
    nsteps = int(math.ceil(T / dt - 1e-9))
    for k in range(1, nsteps + 1):
        try:
            u = step(u, dt, params)
        except (Touchdown, CeilingContact) as exc:
            kind = "Touchdown" if isinstance(exc, Touchdown) else "CeilingContact"
            traj.event = Event(kind, t + dt)
            break
        t = k * dt
        d = dist(u)
        last = k == nsteps
        done = (stop_radius is not None and d > stop_radius) or (
            stop_below is not None and d < stop_below
        )
        if k % record_every == 0 or last or done:
            traj.times.append(t)
            traj.profiles.append(u)
            traj.norms.append(d)
        if done:
            traj.left_ball = stop_radius is not None and d > stop_radius
            break
    return traj


@dataclass(frozen=True)
class StabilityReport:
    reference: Profile
    fitted_rate: float
    spectral_bound: float
    verdict: str
    fit_window: tuple = field(default=())


def spectral_bound(reference: Profile, params: ModelParams) -> float:
    """Leading eigenvalue of the linearization DF(u) + lam Dg(u) on the same grid."""
    h = reference.grid.h
    if params.model == "sar":
        return float(np.real(matrix_spectrum(jacobian_values(reference.values, h, params.sigma,
                                                             params.lam), 1)[0]))
    from .fbp import dg_fd

    dense = df_operator(reference.values, h, params.sigma).to_dense()
    if params.lam != 0:
        dense = dense + params.lam * dg_fd(reference.grid, reference.values, params.sigma,
                                           params.n_eta)
    return float(np.max(np.linalg.eigvals(dense).real))


def fit_decay_rate(traj: Trajectory, min_samples: int = 20, decades: float = 2.0) -> StabilityReport:
    """Least-squares slope of log(distance) against t over the final decade.

    The final decade is the trailing run of samples whose distance lies within a
    factor 10 of the last one.
    """
    d = np.asarray(traj.norms)
    t = np.asarray(traj.times)
    if len(d) < min_samples or np.any(d <= 0):
        raise InsufficientDecay(f"{len(d)} samples (need {min_samples}, all positive)")
    span = math.log10(d.max() / d.min())
    if span < decades:
        raise InsufficientDecay(f"distances span {span:.2f} decades (need {decades:g})")
    ratio = d / d[-1]
    outside = np.flatnonzero((ratio > 10.0) | (ratio < 0.1))
    start = outside[-1] + 1 if len(outside) else 0
    if len(d) - start < 3:
        raise InsufficientDecay("too few samples in the final decade")
    rate = float(np.polyfit(t[start:], np.log(d[start:]), 1)[0])
    bound = spectral_bound(traj.reference, traj.params)
    verdict = UNSTABLE if rate > 0 else STABLE
    return StabilityReport(traj.reference, rate, bound, verdict, (float(t[start]), float(t[-1])))


def leading_eigenfunction(reference: Profile, params: ModelParams) -> np.ndarray:
    """Leading eigenvector of the SAR linearization, on all nodes, max-norm 1."""
    op = jacobian_values(reference.values, reference.grid.h, params.sigma, params.lam)
    _, x = leading_mode(op)
    out = np.zeros(reference.grid.n)
    out[1:-1] = x
    return out


def perturbed(reference: Profile, direction: np.ndarray, amplitude: float) -> Profile:
    return Profile(reference.grid, reference.values + amplitude * direction)
