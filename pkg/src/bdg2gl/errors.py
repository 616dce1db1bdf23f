"""Exception types shared across the package.

Each maps onto one CLI exit code (see ``cli.EXIT_CODES``).
"""


class ParameterError(ValueError):
    """Invalid input parameters or mismatched grids."""


class DomainError(ValueError):
    """Evaluation outside a tabulated or admissible range."""


class NumericalError(RuntimeError):
    """A numerical invariant failed (eigensolver, quadrature, positivity)."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not converge; carries its residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class AssumptionViolation(RuntimeError):
    """The model violates a standing hypothesis (no pairing, degenerate gap)."""


class BifurcationError(NumericalError):
    """Newton Jacobian singular beyond the symmetry-induced kernel."""


class NoSolutionError(RuntimeError):
    """Requested branch does not exist for the given parameters."""
