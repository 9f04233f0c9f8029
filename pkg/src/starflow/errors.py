"""Exception hierarchy shared by every starflow module."""


class StarflowError(Exception):
    """Base class for all starflow errors."""


class InvalidParameter(StarflowError, ValueError):
    pass


class EmptyRestriction(StarflowError):
    """Restricting a partial map to a set disjoint from its domain."""


class NotExtendable(StarflowError):
    """The solution set offers no local extension rule."""


class IntegrationFailure(StarflowError):
    pass


class NotCompactWindow(StarflowError):
    pass


class PreconditionFailed(StarflowError):
    """A check was asked to run on inputs that fail its precondition.

    ``verdicts`` carries whatever evidence made the precondition fail
    (typically a list of axiom verdicts).
    """

    def __init__(self, message, verdicts=None):
        super().__init__(message)
        self.verdicts = list(verdicts or [])


class IdentityViolation(StarflowError):
    """A builder's defining identity fails; ``worst`` is the worst grid point."""

    def __init__(self, message, worst=None, residual=None):
        super().__init__(message)
        self.worst = worst
        self.residual = residual


class SourceTargetMismatch(StarflowError):
    pass


class ConfigError(StarflowError):
    """Raised for malformed system, window or morphism descriptors."""
