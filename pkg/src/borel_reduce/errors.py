"""Exception hierarchy shared across the package."""


class BorelReduceError(Exception):
    pass


class ParameterError(BorelReduceError, ValueError):
    """An argument is out of range or structurally invalid."""


class DomainError(BorelReduceError, ValueError):
    """A numeric input lies outside the domain an operation accepts."""


class DataError(BorelReduceError):
    """A dataset file or array could not be parsed or validated."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SingularMatrixError(BorelReduceError, ArithmeticError):
    pass
