"""Catenoid branch constants, exact catenoid profiles and the surface energy.

For lambda = 0 both film models reduce to the minimal surface equation whose
solutions are the translated catenoids ``cosh(c z)/cosh(c) - 1`` with
``sigma = cosh(c)/c``.  That relation has two roots above ``sigma_crit``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .errors import NoSolution

EPS_GAP = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-1, 1] with an odd node count, so z = 0 is a node."""

    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"grid needs an odd node count >= 3, got {self.n}")
        m = (self.n - 1) // 2
        # built from integers so the nodes are exactly antisymmetric
        z = np.arange(-m, m + 1, dtype=float) / m
        z.setflags(write=False)
        object.__setattr__(self, "nodes", z)

    @property
    def h(self) -> float:
        return 2.0 / (self.n - 1)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def refined(self) -> "Grid":
        """Grid with halved spacing (2n - 1 nodes) sharing all current nodes."""
        return Grid(2 * self.n - 1)


@dataclass(frozen=True)
class Profile:
    """Film displacement u(z) sampled on a grid, with u(+-1) = 0 and -1 < u < 1."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        u = np.array(self.values, dtype=float)
        if u.shape != (self.grid.n,):
            raise ValueError(f"profile has {u.shape} samples for a {self.grid.n}-node grid")
        if u[0] != 0.0 or u[-1] != 0.0:
            raise ValueError("profile must vanish at z = +-1")
        if not (np.all(u > -1.0) and np.all(u < 1.0)):
            raise ValueError("profile leaves the admissible set -1 < u < 1")
        u.setflags(write=False)
        object.__setattr__(self, "values", u)

    @property
    def z(self) -> np.ndarray:
        return self.grid.nodes

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values[::-1])))

    @classmethod
    def from_interior(cls, grid: Grid, interior) -> "Profile":
        u = np.zeros(grid.n)
        u[1:-1] = interior
        return cls(grid, u)


@dataclass(frozen=True)
class BranchPair:
    sigma: float
    c_out: float
    c_in: float
    c_crit: float
    sigma_crit: float

    def c(self, branch: str) -> float:
        branch = branch.lower()
        if branch == "outer":
            return self.c_out
        if branch == "inner":
            return self.c_in
        raise ValueError(f"unknown branch {branch!r}")


def _crit_fn(c):
    return c * math.sinh(c) - math.cosh(c)


@lru_cache(maxsize=None)
def solve_c_crit() -> float:
    """Positive root of c sinh(c) = cosh(c) (about 1.19967864)."""
    lo, hi = 1.0, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _crit_fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    # derivative of c sinh c - cosh c is c cosh c
    for _ in range(3):
        c -= _crit_fn(c) / (c * math.cosh(c))
    return c


def sigma_crit() -> float:
    c = solve_c_crit()
    return math.cosh(c) / c


def solve_branches(sigma: float) -> BranchPair:
    """Both roots of cosh(c)/c = sigma."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    cc = solve_c_crit()
    sc = math.cosh(cc) / cc
    if abs(sigma - sc) <= 1e-12:
        return BranchPair(sigma, cc, cc, cc, sc)
    if sigma < sc:
        raise NoSolution(
            f"no catenoid for sigma = {sigma:g} below sigma_crit = {sc:.6f}"
        )

    def f(c):
        return math.cosh(c) / c - sigma

    # cosh(c)/c > sigma at c = 1/sigma already, so this brackets the outer root
    c_out = brentq(f, 0.5 / sigma, cc, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    hi = 2.0 * cc
    while f(hi) < 0.0:
        hi *= 2.0
    c_in = brentq(f, cc, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return BranchPair(sigma, c_out, c_in, cc, sc)


def catenoid_profile(c: float, grid: Grid) -> Profile:
    if not c > 0:
        raise ValueError("catenoid parameter must be positive")
    u = np.cosh(c * grid.nodes) / math.cosh(c) - 1.0
    u[0] = u[-1] = 0.0
    return Profile(grid, u)


def slope(values: np.ndarray, h: float) -> np.ndarray:
    """Centered first derivative, second-order one-sided at the ends."""
    return np.gradient(values, h, edge_order=2)


def surface_energy(u: Profile, sigma: float) -> float:
    """Simpson quadrature of (u + 1) sqrt(1 + sigma^2 u_z^2) over [-1, 1]."""
    uz = slope(u.values, u.grid.h)
    integrand = (u.values + 1.0) * np.sqrt(1.0 + sigma**2 * uz**2)
    return float(simpson(integrand, x=u.grid.nodes))
