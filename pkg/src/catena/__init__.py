"""Stationary shapes, stability and voltage-driven deflection of catenoid films.

A soap film spans two coaxial rings inside a grounded cylinder; a voltage
between film and cylinder deforms it.  The package provides the catenoid
branches, the Sturm-Liouville spectrum that decides their stability, stationary
solvers for a small-aspect-ratio force model and for the free boundary problem
with the full potential, the direction of deflection, and time evolution.
"""

from .errors import (
    CatenaError, CeilingContact, CriterionViolated, DomainError, InsufficientDecay, InvalidConfig,
    NoConvergence, NoSolution, NotBracketed, NumericalError, SingularGap, SingularJacobian,
    SingularOperator, Touchdown,
)
from .geometry import (
    BranchPair, Grid, Profile, catenoid_profile, sigma_crit, solve_branches, solve_c_crit,
)

__version__ = "0.1.0"

__all__ = [
    "BranchPair", "CatenaError", "CeilingContact", "CriterionViolated", "DomainError", "Grid",
    "InsufficientDecay", "InvalidConfig", "NoConvergence", "NoSolution", "NotBracketed",
    "NumericalError", "Profile", "SingularGap", "SingularJacobian", "SingularOperator",
    "Touchdown", "catenoid_profile", "sigma_crit", "solve_branches", "solve_c_crit",
]
