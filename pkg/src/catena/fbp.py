"""Free boundary model: potential on the film/cylinder gap and its boundary force.

The potential psi(z, r) solves (1/r)(r psi_r)_r + sigma^2 psi_zz = 0 between the
film r = u(z) + 1 and the cylinder r = 2.  The gap is mapped onto the fixed
rectangle [-1, 1] x [0, 1] by eta = (r - R(z)) / (2 - R(z)), R = u + 1, and the
transformed equation (with its first-order and mixed terms) is discretized by
second-order centered differences.  The force on the film is
g = (1 + sigma^2 u_z^2)^(3/2) |psi_r(z, R(z))|^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import NoConvergence, SingularGap, SingularOperator
from .geometry import EPS_GAP, Grid, Profile, slope
from .sar import (
    ContinuationCurve, ForceField, branch_catenoid, check_gap, continuation,
    df_operator, dgsar_operator, residual_values,
)

log = logging.getLogger(__name__)

FBP_TOL = 1e-8
MAX_OUTER = 50
PICARD_LAMBDA = 0.01
FD_MAX_UNKNOWNS = 150
SOLVE_TOL = 1e-10


def default_n_eta(n_z: int) -> int:
    return (n_z + 1) // 2 + 1


def boundary_data(u_z: float, r: float) -> float:
    """Radial logarithmic potential ln(r/R) / ln(2/R) with R = u(z) + 1."""
    R = u_z + 1.0
    if R <= EPS_GAP:
        raise SingularGap(f"film reaches the axis: u + 1 = {R:.3e}")
    return float(np.log(r / R) / np.log(2.0 / R))


@dataclass(frozen=True)
class PotentialGrid:
    z: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    sigma: float
    psi: np.ndarray  # shape (n_z, n_eta)
    solve_residual: float

    @property
    def r(self) -> np.ndarray:
        R = self.u[:, None] + 1.0
        return R + self.eta[None, :] * (2.0 - R)

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.psi - self.psi[::-1, :])))


_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


def _stencil(u, z_h, eta, sigma):
    """Coefficients of the 9-point stencil at interior nodes, keyed by offset."""
    n_eta = len(eta)
    he = eta[1] - eta[0]
    R = u[1:-1, None] + 1.0
    W = 2.0 - R
    dR = ((u[2:] - u[:-2]) / (2 * z_h))[:, None]
    d2R = ((u[2:] - 2 * u[1:-1] + u[:-2]) / z_h**2)[:, None]
    e = eta[None, 1:-1]
    r = R + e * W
    eta_z = -dR * (1.0 - e) / W
    eta_zz = -d2R * (1.0 - e) / W - 2.0 * dR**2 * (1.0 - e) / W**2
    A = 1.0 / W**2 + sigma**2 * eta_z**2
    B = np.full_like(A, sigma**2)
    C = 2.0 * sigma**2 * eta_z
    E = 1.0 / (r * W) + sigma**2 * eta_zz
    shape = (len(u) - 2, n_eta - 2)
    zero = np.zeros(shape)
    st = {off: zero.copy() for off in _OFFSETS}
    st[(0, 0)] = -2.0 * A / he**2 - 2.0 * B / z_h**2
    st[(0, 1)] = A / he**2 + E / (2 * he)
    st[(0, -1)] = A / he**2 - E / (2 * he)
    st[(1, 0)] = B / z_h**2 + zero
    st[(-1, 0)] = B / z_h**2 + zero
    cross = C / (4 * z_h * he)
    st[(1, 1)] = cross
    st[(-1, -1)] = cross.copy()
    st[(1, -1)] = -cross
    st[(-1, 1)] = -cross
    return st


def _boundary_frame(u, eta):
    """Full-grid array holding the Dirichlet data; interior entries are zero."""
    n_z, n_eta = len(u), len(eta)
    psi = np.zeros((n_z, n_eta))
    psi[:, -1] = 1.0
    for i in (0, n_z - 1):
        R = u[i] + 1.0
        r = R + eta * (2.0 - R)
        psi[i, :] = np.log(r / R) / np.log(2.0 / R)
        psi[i, 0], psi[i, -1] = 0.0, 1.0
    return psi


def solve_potential_values(grid: Grid, u: np.ndarray, sigma: float, n_eta: int | None = None) -> PotentialGrid:
    """Potential for arbitrary film samples (ends need not vanish)."""
    u = np.asarray(u, dtype=float)
    check_gap(u)
    n_eta = n_eta or default_n_eta(grid.n)
    if n_eta < 3:
        raise ValueError("n_eta must be at least 3")
    eta = np.linspace(0.0, 1.0, n_eta)
    st = _stencil(u, grid.h, eta, sigma)
    psi = _boundary_frame(u, eta)
    mz, me = grid.n - 2, n_eta - 2
    idx = np.arange(mz * me).reshape(mz, me)
    rows, cols, vals = [], [], []
    rhs = np.zeros((mz, me))
    for (di, dj), coef in st.items():
        # neighbour (i + di, j + dj) in interior-index coordinates
        ii = np.broadcast_to(np.arange(mz)[:, None] + di, (mz, me))
        jj = np.broadcast_to(np.arange(me)[None, :] + dj, (mz, me))
        inside = (ii >= 0) & (ii < mz) & (jj >= 0) & (jj < me)
        rows.append(idx[inside])
        cols.append(idx[ii[inside], jj[inside]])
        vals.append(coef[inside])
        outside = ~inside
        if np.any(outside):
            rhs[outside] -= coef[outside] * psi[ii[outside] + 1, jj[outside] + 1]
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mz * me, mz * me),
    )
    b = rhs.ravel()
    x = spsolve(A.tocsc(), b)
    if not np.all(np.isfinite(x)):
        raise SingularOperator("potential system is singular")
    res = float(np.max(np.abs(A @ x - b) / np.abs(A.diagonal())))
    if res > SOLVE_TOL:
        raise NoConvergence(f"potential solve residual {res:.2e}")
    psi[1:-1, 1:-1] = x.reshape(mz, me)
    return PotentialGrid(grid.nodes, eta, u, sigma, psi, res)


def solve_potential(u: Profile, sigma: float, n_eta: int | None = None) -> PotentialGrid:
    return solve_potential_values(u.grid, u.values, sigma, n_eta)


def force_values(psi: PotentialGrid, h: float) -> np.ndarray:
    he = psi.eta[1] - psi.eta[0]
    dpsi = (-3.0 * psi.psi[:, 0] + 4.0 * psi.psi[:, 1] - psi.psi[:, 2]) / (2 * he)
    W = 1.0 - psi.u
    uz = slope(psi.u, h)
    return (1.0 + psi.sigma**2 * uz**2) ** 1.5 * (dpsi / W) ** 2


def electrostatic_force(u: Profile, psi: PotentialGrid, sigma: float) -> ForceField:
    if psi.sigma != sigma or not np.array_equal(psi.u, u.values):
        raise ValueError("potential was solved for a different film or sigma")
    return ForceField(u.grid, force_values(psi, u.grid.h))


def fbp_force_values(grid: Grid, u: np.ndarray, sigma: float, n_eta: int | None = None) -> np.ndarray:
    return force_values(solve_potential_values(grid, u, sigma, n_eta), grid.h)


def residual_fbp(u: Profile, sigma: float, lam: float, n_eta: int | None = None) -> np.ndarray:
    g = fbp_force_values(u.grid, u.values, sigma, n_eta) if lam != 0 else 0.0
    return residual_values(u.values, u.grid.h, sigma, lam, force=g)


def dg_fd(grid: Grid, u: np.ndarray, sigma: float, n_eta: int | None = None,
          g0: np.ndarray | None = None) -> np.ndarray:
    """Dense forward-difference derivative of the FBP force at interior nodes.

    One potential solve per interior node; only practical on coarse grids.
    """
    if g0 is None:
        g0 = fbp_force_values(grid, u, sigma, n_eta)
    eps = 1e-6 * (1.0 + np.max(np.abs(u)))
    m = grid.n - 2
    out = np.empty((m, m))
    for k in range(m):
        up = u.copy()
        up[k + 1] += eps
        out[:, k] = (fbp_force_values(grid, up, sigma, n_eta)[1:-1] - g0[1:-1]) / eps
    return out


def _solve_fbp(sigma, lam, init: Profile, n_eta=None, tol=FBP_TOL, dg="auto"):
    grid = init.grid
    h = grid.h
    u = init.values.copy()
    if dg == "auto":
        if lam <= PICARD_LAMBDA:
            dg = "frozen"
        else:
            dg = "fd" if grid.n - 2 <= FD_MAX_UNKNOWNS else "sar"
    last = None
    for it in range(MAX_OUTER):
        g = fbp_force_values(grid, u, sigma, n_eta) if lam != 0 else np.zeros(grid.n)
        r = residual_values(u, h, sigma, lam, force=g)
        rmax = float(np.max(np.abs(r)))
        log.debug("fbp outer %d: lambda=%g max|r|=%.3e", it, lam, rmax)
        if rmax <= tol:
            return Profile(grid, u), rmax, it
        if last is not None and rmax > 0.9 * last and it > 5:
            break
        last = rmax
        J = df_operator(u, h, sigma)
        if lam == 0 or dg == "frozen":
            delta = J.solve(r)
        elif dg == "sar":
            delta = (J + dgsar_operator(u, h, sigma).scaled(lam)).solve(r)
        else:
            dense = J.to_dense() + lam * dg_fd(grid, u, sigma, n_eta, g0=g)
            try:
                delta = np.linalg.solve(dense, r)
            except np.linalg.LinAlgError as exc:
                raise SingularOperator(str(exc)) from exc
        t = 1.0
        for _ in range(20):
            trial = u.copy()
            trial[1:-1] += t * delta
            try:
                check_gap(trial)
                break
            except SingularGap:
                t *= 0.5
        else:
            raise SingularGap("quasi-Newton step leaves the admissible set")
        u = trial
    raise NoConvergence(f"FBP iteration stalled at max|r| = {rmax:.2e} (lambda = {lam:g})")


def solve_stationary_fbp(sigma: float, lam: float, init: Profile, n_eta: int | None = None,
                         tol: float = FBP_TOL, dg: str = "auto") -> Profile:
    """Stationary free-boundary film near ``init``.

    Each outer iteration re-solves the potential and takes a Newton step for
    F(u) + lam g(u) = 0 in which the force derivative is frozen (lam <= 0.01),
    taken by finite differences (coarse grids) or replaced by the analytic
    small-aspect-ratio derivative.
    """
    return _solve_fbp(sigma, lam, init, n_eta, tol, dg)[0]


def continue_in_lambda_fbp(sigma: float, branch: str, lambda_max: float, steps: int,
                           grid: Grid | None = None, n_eta: int | None = None,
                           strict: bool = True) -> ContinuationCurve:
    grid = grid or Grid(201)
    start = branch_catenoid(sigma, branch, grid)
    record = {}

    def solve(lam, init):
        prof, rmax, _ = _solve_fbp(sigma, lam, init, n_eta)
        record[id(prof)] = rmax
        return prof

    def res_max(lam, u):
        if id(u) in record:
            return record.pop(id(u))
        return float(np.max(np.abs(residual_fbp(u, sigma, lam, n_eta))))

    return continuation(solve, res_max, start, lambda_max, steps, sigma, branch.lower(),
                        "fbp", strict=strict)
