class ParameterError(ValueError):
    """Raised when an input violates an operation's preconditions."""


class ConvergenceError(RuntimeError):
    """Raised when an optimization fails to converge from every start.

    The best point found is attached as ``best`` so callers can still
    inspect or report it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
