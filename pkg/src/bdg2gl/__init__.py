"""Numerical lab for the BdG to Ginzburg-Landau correspondence near T_c."""
__version__ = "0.1.0"

from .errors import (AssumptionViolation, BifurcationError, ConvergenceError, DomainError,
                     NoSolutionError, NumericalError, ParameterError)
from .model import LatticeGrid, ModelParams, Potential

__all__ = ["AssumptionViolation", "BifurcationError", "ConvergenceError", "DomainError",
           "LatticeGrid", "ModelParams", "NoSolutionError", "NumericalError", "ParameterError",
           "Potential", "__version__"]
