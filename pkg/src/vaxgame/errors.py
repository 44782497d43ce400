"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConfigurationError(ValueError):
    """Inconsistent solver or game configuration, or a malformed config file."""


class NonConvergenceError(RuntimeError):
    """Picard iteration did not reach its tolerance.

    The partial :class:`~vaxgame.coupled.PicardReport` is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
