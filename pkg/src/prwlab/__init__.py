"""Simulation and analytic criteria for perturbed random walks
``T_n = S_{n-1} + eta_n`` and the shot-noise processes built on them."""

__version__ = "0.1.0"

from .errors import (AccuracyError, CouplingError, DivergenceError, InsufficientSamples, LawError,
                     NoRootError, NotApplicable, PreconditionError, PRWError, UndefinedQuantity)
from .laws import JointLaw, make_marginal, rate_R, ruin_exponent, solve_gamma
from .verdicts import FINITE, INCONCLUSIVE, INFINITE, VerdictConfig

__all__ = [
    "__version__", "JointLaw", "make_marginal", "rate_R", "ruin_exponent", "solve_gamma",
    "VerdictConfig", "FINITE", "INFINITE", "INCONCLUSIVE",
    "PRWError", "LawError", "UndefinedQuantity", "AccuracyError", "NoRootError", "PreconditionError",
    "NotApplicable", "DivergenceError", "CouplingError", "InsufficientSamples",
]
