"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""


class AccuracyError(ConvergenceError):
    """Two refinement levels of a quadrature disagree beyond tolerance.

    Both candidate values are kept so callers can inspect the gap.
    """

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class OrliczDivergenceError(ConvergenceError):
    """The Luxemburg bisection could not bracket the unit level."""


class ConfigError(ValueError):
    """Invalid experiment configuration. ``field`` names the offending key."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
