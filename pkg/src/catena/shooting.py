"""Sturm-Liouville eigenvalues of the linearization at a catenoid.

The linearized operator at the catenoid with parameter c is, up to the factor
sigma^2,

    L v = (v' / cosh^2(c z))' + c^2 v / cosh^2(c z),   v(+-1) = 0.

Eigenvalues mu are found by shooting: integrate ``mu v = L v`` from z = -1 with
v = 0, v' = 1 and record the terminal value D(c, mu) = v(1).  The ODE is carried
in flux form (v, w) with w = v' / cosh^2(c z), which keeps the right-hand side
linear with smooth bounded coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NotBracketed
from .geometry import Grid, solve_c_crit
from .linalg import TridiagonalOperator

SCAN_STEP = 0.25
ZERO_THRESHOLD = 1e-12
# brentq tolerances for eigenvalues: |mu - mu_exact| <= MU_XTOL + MU_RTOL |mu|
MU_XTOL = 1e-15
MU_RTOL = 1e-15


@dataclass(frozen=True)
class ShotResult:
    c: float
    mu: float
    D: float
    z: np.ndarray
    v: np.ndarray
    dv: np.ndarray


@dataclass(frozen=True)
class EigenPair:
    index: int
    mu: float
    z: np.ndarray
    v: np.ndarray
    nodes: int

    def parity_defect(self) -> float:
        return float(np.max(np.abs(self.v[::-1] - (-1) ** self.index * self.v)))


@dataclass(frozen=True)
class EigenCurve:
    index: int
    c: np.ndarray
    mu: np.ndarray
    zeros: tuple

    @property
    def points(self):
        return list(zip(self.c.tolist(), self.mu.tolist()))


def _coefficients(c: float, grid: Grid):
    z = grid.nodes
    zm = 0.5 * (z[:-1] + z[1:])
    # P multiplies the flux in v' = P w, Q is the potential c^2/cosh^2
    p_node = np.cosh(c * z) ** 2
    p_mid = np.cosh(c * zm) ** 2
    return p_node, p_mid, c * c / p_node, c * c / p_mid


def _terminal_values(c: float, mus: np.ndarray, grid: Grid) -> np.ndarray:
    """D(c, mu) for a whole array of mu at once."""
    p_node, p_mid, q_node, q_mid = _coefficients(c, grid)
    h = grid.h
    mus = np.asarray(mus, dtype=float)
    v = np.zeros_like(mus)
    w = np.full_like(mus, 1.0 / p_node[0])
    for i in range(grid.n - 1):
        k1v = p_node[i] * w
        k1w = (mus - q_node[i]) * v
        k2v = p_mid[i] * (w + 0.5 * h * k1w)
        k2w = (mus - q_mid[i]) * (v + 0.5 * h * k1v)
        k3v = p_mid[i] * (w + 0.5 * h * k2w)
        k3w = (mus - q_mid[i]) * (v + 0.5 * h * k2v)
        k4v = p_node[i + 1] * (w + h * k3w)
        k4w = (mus - q_node[i + 1]) * (v + h * k3v)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        w = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return v


def _integrate(coeffs, mu: float, h: float, n: int):
    p_node, p_mid, q_node, q_mid = (a.tolist() for a in coeffs)
    v, w = 0.0, 1.0 / p_node[0]
    vs = [v]
    ws = [w]
    for i in range(n - 1):
        k1v = p_node[i] * w
        k1w = (mu - q_node[i]) * v
        k2v = p_mid[i] * (w + 0.5 * h * k1w)
        k2w = (mu - q_mid[i]) * (v + 0.5 * h * k1v)
        k3v = p_mid[i] * (w + 0.5 * h * k2w)
        k3w = (mu - q_mid[i]) * (v + 0.5 * h * k2v)
        k4v = p_node[i + 1] * (w + h * k3w)
        k4w = (mu - q_node[i + 1]) * (v + h * k3v)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        vs.append(v)
        ws.append(w)
    return vs, ws


def shoot(c: float, mu: float, grid: Grid) -> ShotResult:
    """Integrate the eigenvalue ODE from z = -1 (v = 0, v' = 1) by classical RK4."""
    if not c > 0:
        raise ValueError("c must be positive")
    coeffs = _coefficients(c, grid)
    vs, ws = _integrate(coeffs, mu, grid.h, grid.n)
    v = np.array(vs)
    dv = coeffs[0] * np.array(ws)
    return ShotResult(c, mu, v[-1], grid.nodes, v, dv)


def closed_form_D0(c: float) -> float:
    """D(c, 0) from the fundamental system {sinh(cz), cz sinh(cz) - cosh(cz)}."""
    y1, dy1 = math.sinh(-c), c * math.cosh(-c)
    y2, dy2 = c * -1.0 * math.sinh(-c) - math.cosh(-c), c * c * -1.0 * math.cosh(-c)
    det = y1 * dy2 - y2 * dy1
    # a y1 + b y2 = 0 and a dy1 + b dy2 = 1 at z = -1
    a = -y2 / det
    b = y1 / det
    return a * math.sinh(c) + b * (c * math.sinh(c) - math.cosh(c))


def bisection_tolerance(mu: float) -> float:
    return MU_XTOL + MU_RTOL * abs(mu)


def count_nodes(v: np.ndarray, threshold: float = ZERO_THRESHOLD) -> int:
    """Strict sign changes among samples with |v| above the threshold."""
    s = np.sign(v[np.abs(v) > threshold])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _brackets(c, grid, count, mu_upper, mu_lower, step):
    """Scan mu downward and return the first ``count`` sign-change brackets."""
    found = []
    top = mu_upper
    d_top = None
    chunk = 64
    while len(found) < count:
        if top <= mu_lower:
            raise NotBracketed(
                f"only {len(found)} of {count} eigenvalues of c = {c:g} above mu = {mu_lower:g}"
            )
        mus = top - step * np.arange(chunk + 1)
        mus = mus[mus >= mu_lower - step]
        ds = _terminal_values(c, mus, grid)
        if d_top is not None:
            ds[0] = d_top
        for k in range(len(mus) - 1):
            if ds[k] == 0.0:
                found.append((mus[k], mus[k]))
            elif ds[k] * ds[k + 1] < 0.0:
                found.append((mus[k + 1], mus[k]))
            if len(found) == count:
                break
        top, d_top = mus[-1], ds[-1]
    return found


def eigenvalue(
    c: float,
    n: int,
    grid: Grid,
    mu_lower: float | None = None,
    step: float = SCAN_STEP,
) -> EigenPair:
    """The n-th eigenvalue (counting from the top) and its eigenfunction.

    The scan starts at mu = c^2, which bounds the spectrum from above because the
    potential c^2/cosh^2(cz) never exceeds c^2.
    """
    if not c > 0 or n < 0:
        raise ValueError("need c > 0 and n >= 0")
    if mu_lower is None:
        mu_lower = -60.0 - 40.0 * (n + 1) ** 2
    coeffs = _coefficients(c, grid)
    h = grid.h

    def D(mu):
        return _integrate(coeffs, mu, h, grid.n)[0][-1]

    for _ in range(4):
        lo, hi = _brackets(c, grid, n + 1, c * c, mu_lower, step)[n]
        mu = lo if lo == hi else brentq(D, lo, hi, xtol=MU_XTOL, rtol=MU_RTOL, maxiter=200)
        v = np.array(_integrate(coeffs, mu, h, grid.n)[0])
        v /= np.max(np.abs(v))
        nodes = count_nodes(v[1:-1])
        if nodes == n:
            return EigenPair(n, float(mu), grid.nodes, v, nodes)
        # two eigenvalues fell into one scan step; look again more finely
        step *= 0.25
    raise NotBracketed(f"could not isolate eigenvalue {n} of c = {c:g} (node count {nodes})")


def eigencurve(c_lo: float, c_hi: float, n: int, samples: int, grid: Grid) -> EigenCurve:
    """Sample c -> mu_n(c); for n = 0 also locate its zeros in c."""
    if not 0 < c_lo < c_hi:
        raise ValueError("need 0 < c_lo < c_hi")
    cs = np.linspace(c_lo, c_hi, samples)
    mus = np.array([eigenvalue(c, n, grid).mu for c in cs])
    zeros = []
    if n == 0:
        for k in range(samples - 1):
            if mus[k] == 0.0:
                zeros.append(float(cs[k]))
            elif mus[k] * mus[k + 1] < 0.0:
                zeros.append(
                    brentq(lambda c: eigenvalue(c, 0, grid).mu, cs[k], cs[k + 1], xtol=1e-13)
                )
    return EigenCurve(n, cs, mus, tuple(zeros))


def eigencurve_slope(c: float, grid: Grid, dc: float = 1e-3, n: int = 0) -> float:
    """Centered difference of mu_n(c)."""
    return (eigenvalue(c + dc, n, grid).mu - eigenvalue(c - dc, n, grid).mu) / (2 * dc)


def dmu_D(c: float, mu: float, grid: Grid, dmu: float = 1e-6) -> float:
    """Centered difference of D(c, .) at mu."""
    d = _terminal_values(c, np.array([mu - dmu, mu + dmu]), grid)
    return float((d[1] - d[0]) / (2 * dmu))


def sturm_liouville_operator(c: float, grid: Grid) -> TridiagonalOperator:
    """Conservative second-order discretization of L with analytic coefficients."""
    z = grid.nodes
    h = grid.h
    p = 1.0 / np.cosh(c * 0.5 * (z[:-1] + z[1:])) ** 2
    q = c * c / np.cosh(c * z[1:-1]) ** 2
    diag = -(p[:-1] + p[1:]) / h**2 + q
    off = p[1:-1] / h**2
    return TridiagonalOperator(off, diag, off.copy())


def critical_eigenfunction(grid: Grid) -> np.ndarray:
    """c z sinh(c z) - cosh(c z) at c = c_crit, scaled to max-norm 1 and positive."""
    c = solve_c_crit()
    z = grid.nodes
    w = -(c * z * np.sinh(c * z) - np.cosh(c * z))
    return w / np.max(np.abs(w))
