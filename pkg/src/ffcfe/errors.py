"""Exception hierarchy shared by the tableau builder and the integrator."""


class FFCFEError(Exception):
    """Base class for all library errors."""


class DegenerateSpaceError(FFCFEError, ValueError):
    """The fitting space is numerically rank deficient for the requested frequency."""

    def __init__(self, message, nu=None, cond=None):
        super().__init__(message)
        self.nu = nu
        self.cond = cond


class NodeDegeneracyError(FFCFEError, ValueError):
    """The collocation matrix of the trial space at the stage nodes is singular."""

    def __init__(self, message, cond_lambda=None):
        super().__init__(message)
        self.cond_lambda = cond_lambda


class StepError(FFCFEError, ArithmeticError):
    """A single step failed. ``step_index`` is filled in by the trajectory driver."""

    def __init__(self, message, residual=None, iterations=None, step_index=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index

    def __str__(self):
        msg = super().__str__()
        if self.step_index is not None:
            msg = f"step {self.step_index}: {msg}"
        return msg


class ConvergenceError(StepError):
    """Fixed-point iteration did not reach the tolerance within ``max_iter``."""


class BlowUpError(StepError):
    """A right-hand side evaluation produced NaN or Inf."""


class DivergenceError(StepError):
    """The stage residual grew far beyond its initial size."""
