"""Exception hierarchy."""


class SunQSDEError(Exception):
    """Base class for all package errors."""


class DomainError(SunQSDEError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class InconsistentBasisError(SunQSDEError, ValueError):
    """Generators fail the trace orthonormality needed to extract structure constants."""


class ConsistencyError(SunQSDEError, RuntimeError):
    """A quantity that must be real (or exact) carries a non-negligible residue."""


class ModelValidationError(SunQSDEError, ValueError):
    """A state-space model or SLH description has inconsistent shape or non-real entries.

    ``field`` names the offending entry (e.g. ``"A"`` or ``"B1[0]"``).
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class IntegrationDivergedError(SunQSDEError, ArithmeticError):
    """Moment integration produced a non-finite state.

    ``last_state`` holds the last finite :class:`~sunqsde.oracle.MomentState`.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state
