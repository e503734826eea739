"""Exception types raised by the library."""


class LowNoiseError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(LowNoiseError):
    """Operands have incompatible shapes."""


class NonHermitian(LowNoiseError):
    """A matrix required to be Hermitian fails the Hermiticity check."""


class NoConvergence(LowNoiseError):
    """The underlying eigensolver did not converge."""


class DegenerateSamples(LowNoiseError):
    """Power-law fit input is unusable (too few points or non-positive values)."""


class TPCPViolation(LowNoiseError):
    """Channel evaluated outside its physical (trace-preserving, positive) region."""


class InconsistentKrausData(LowNoiseError):
    """Kraus coefficients violate the first-order trace-preservation constraint."""


class StepTooLarge(LowNoiseError):
    """Finite-difference probe points leave the channel's validity region."""


class ReductionInvalid(LowNoiseError):
    """Covariance reduction requested outside its K <= N-1 regime."""


class EmptySum(LowNoiseError):
    """No first-order eigenvalue shift is available for the requested sum."""


class SingularFisher(LowNoiseError):
    """Fisher matrix is numerically singular; inverse not defined."""


class BadProbabilities(LowNoiseError):
    """Measurement outcome probabilities are negative or do not sum to one."""


class ConfigInvalid(LowNoiseError):
    """Scenario or channel configuration fails validation."""


class IOFailure(LowNoiseError):
    """Report could not be written or read."""
