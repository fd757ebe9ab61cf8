"""Exception types raised across levykern."""


class LevyKernError(Exception):
    pass


class DomainError(LevyKernError, ValueError):
    """Argument outside the domain of a function or parameter out of range."""


class ConvergenceError(LevyKernError, RuntimeError):
    pass


class QuadratureError(LevyKernError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    ``abserr`` carries the achieved error estimate.
    """

    def __init__(self, message, value=None, abserr=None):
        super().__init__(message)
        self.value = value
        self.abserr = abserr


class InversionAccuracyError(QuadratureError):
    pass


class ScalingFitError(LevyKernError, RuntimeError):
    pass


class RegimeError(LevyKernError, ValueError):
    pass


class InsufficientSignalError(LevyKernError, RuntimeError):
    pass


class ConfigError(LevyKernError, ValueError):
    pass
