"""Exception hierarchy.

The CLI maps these onto exit codes: :class:`ConfigError` -> 2,
:class:`DataError` -> 3, :class:`NumericalError` -> 4.
"""


class CoresetError(Exception):
    pass


class ConfigError(CoresetError, ValueError):
    pass


class DataError(CoresetError, ValueError):
    pass


class NumericalError(CoresetError, ArithmeticError):
    pass


class DegenerateProblemError(NumericalError):
    """All log-likelihood vectors have zero norm, so sigma = 0."""

    def __init__(self, msg="degenerate problem: all feature rows have zero norm (sigma = 0)"):
        super().__init__(msg)


class LaplaceError(NumericalError):
    """Newton's method failed to find the mode, or the Hessian is not negative definite."""

    def __init__(self, msg, last_iterate=None):
        super().__init__(msg)
        self.last_iterate = last_iterate


class ProjectionError(NumericalError):
    pass
