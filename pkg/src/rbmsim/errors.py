"""Exception types shared across the simulation library."""


class RbmsimError(Exception):
    """Base class for all library errors."""


class NotSymmetric(RbmsimError, ValueError):
    """Covariance matrix is not symmetric within tolerance."""


class NotPositiveSemidefinite(RbmsimError, ValueError):
    """Covariance matrix has an eigenvalue below the PSD tolerance."""


class NegativeStart(RbmsimError, ValueError):
    """Skorokhod input starts below zero."""


class IndexOutOfRange(RbmsimError, IndexError):
    """Node index outside {0, ..., N-1}."""


class NegativeEntry(RbmsimError, ValueError):
    """Interaction weight matrix has a negative entry."""


class NoConvergence(RbmsimError, RuntimeError):
    """Iterative solver exceeded its sweep budget.

    Carries the best iterate so callers can inspect partial results.
    """

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


class TooLarge(RbmsimError, ValueError):
    """Problem size exceeds an operation's hard limit."""


class DimensionMismatch(RbmsimError, ValueError):
    """Array shapes disagree with the configuration."""


class NonFiniteNoise(RbmsimError, ValueError):
    """Noise increments contain NaN or infinity."""


class PreconditionViolated(RbmsimError, ValueError):
    """Inputs violate a documented ordering or domain precondition."""


class Unsupported(RbmsimError, ValueError):
    """Requested configuration is outside the solver's supported range."""


class OutOfRange(RbmsimError, ValueError):
    """Scalar parameter outside its admissible interval."""


class DomainError(RbmsimError, ValueError):
    """Function argument outside the mathematical domain."""


class EmptySample(RbmsimError, ValueError):
    """Empirical law with no sample points."""


class CFLViolation(RbmsimError, ValueError):
    """Explicit PDE step size violates the stability bound."""


class MassLoss(RbmsimError, RuntimeError):
    """Cumulative clipping renormalization exceeded its budget."""


class BracketFailure(RbmsimError, RuntimeError):
    """Root bracketing failed (function does not cross the target)."""


class AtomTooLarge(RbmsimError, ValueError):
    """Initial atom at zero already saturates the jump condition."""


class ConfigError(RbmsimError, ValueError):
    """Experiment configuration failed validation."""
