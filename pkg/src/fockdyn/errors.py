"""Exception hierarchy.

Validation errors (bad inputs, violated contracts) derive from ValueError;
numerical failures (a computation that was attempted and did not converge)
derive from RuntimeError.  The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class ValidationError(ValueError):
    """Input or contract violation detected before any heavy computation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or did not converge."""


class NegativeOccupation(ValidationError):
    """An occupation number is negative."""


class EmptyConfiguration(ValidationError):
    """A Fock configuration contains no particles."""


class UndefinedDOI(ValidationError):
    """All particles occupy a single mode, so the DOI measure is 0/0."""


class InconsistentDensities(ValidationError):
    """Superposition terms do not share the same total density distribution."""


class NormalizationError(ValidationError):
    """Superposition weights do not square-sum to one."""


class DimensionOverflow(ValidationError):
    """A basis or matrix exceeds the configured size cap."""


class InvalidImbalance(ValidationError):
    """Population imbalance incompatible with the particle number."""


class DimensionMismatch(ValidationError):
    """Two objects disagree on the number of modes or species."""


class NonHermitianInput(ValidationError):
    """A matrix that must be Hermitian is not."""


class BasisMismatch(ValidationError):
    """Operators or states built over different sector bases were combined."""


class DegenerateNormalization(ValidationError):
    """The reference fluctuations coincide, so normalization is undefined."""


class UsageError(ValidationError):
    """Invalid command-line usage."""


class DecompositionFailure(NumericalError):
    """An eigendecomposition failed or did not reproduce its input."""


class ConvergenceFailure(NumericalError):
    """An iterative numerical routine did not converge."""


class QuadratureNonConvergence(NumericalError):
    """Adaptive quadrature did not reach its accuracy target."""
