"""
Exception hierarchy of the verification services.

Every failure a service can signal derives from VerificationError so that the
cli can map it to exit code 1; the ValueError mixins mark caller mistakes that
the HTTP layer reports as 422.
"""


class VerificationError(RuntimeError):
    """Base class for failures raised by the verification services."""


class NonConvergence(VerificationError):
    """A root-finder or maximiser did not converge within its budget."""


class PreconditionViolation(VerificationError, ValueError):
    """An operation was called outside its documented domain."""


class NotCausal(VerificationError):
    """A sampled velocity of a curve is not causal."""


class ToleranceFailure(VerificationError):
    """Step control could not meet the requested tolerance."""


class NoBarrier(VerificationError):
    """No confining spike was found below the configured index cap."""


class ZeroPz(VerificationError, ValueError):
    """An operation that needs p_z != 0 received p_z = 0."""


class QuadratureFailure(VerificationError):
    """Adaptive quadrature reported an unreliable result."""


class SupportViolation(VerificationError, ValueError):
    """A test function's support touches the integration boundary."""


class EmptyGrid(VerificationError, ValueError):
    """A norm grid holds no finite values."""
