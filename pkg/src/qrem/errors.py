"""Exception hierarchy shared by all qrem modules."""


class QremError(Exception):
    """Base class for every error raised by qrem."""


class CapacityError(QremError):
    """Requested problem size exceeds what the chosen method supports."""


class DimensionError(QremError, ValueError):
    """Mismatched spin counts or vector lengths."""


class DomainError(QremError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class ConfigError(QremError, ValueError):
    """Invalid estimator or sweep configuration."""


class ConvergenceError(QremError):
    """An iterative method hit its iteration cap.

    The best available estimate is kept on ``best_estimate``.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
