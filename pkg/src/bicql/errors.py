"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Arguments violate a documented precondition."""


class InvalidStateError(RuntimeError):
    """An object is not in a state that allows the requested operation."""


class NonConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DivergenceError(RuntimeError):
    """A gradient update produced non-finite values.

    ``iteration`` is the step (or outer iteration) at which it happened and
    ``report`` holds whatever partial training report existed at that point.
    """

    def __init__(self, message, iteration, report=None):
        super().__init__(message)
        self.iteration = iteration
        self.report = report


class DatasetParseError(ValueError):
    """A dataset or table file is malformed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
