"""Exception and warning classes shared across the package."""


class McpartError(Exception):
    """Base class for all errors raised by this package."""


class CodingError(McpartError, ValueError):
    """Invalid coding matrix, class count or partition tree."""


class SizeLimitError(CodingError):
    pass


class ConstructionError(McpartError, RuntimeError):
    """A generator could not find a valid matrix within its budget."""


class ControlSyntaxError(McpartError, ValueError):
    """Syntax or validation error in a control-language source.

    ``span`` locates the offending token when known.
    """

    def __init__(self, message, span=None):
        self.span = span
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)


class DataError(McpartError, ValueError):
    """Malformed or inconsistent input data."""


class LibsvmFormatError(DataError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DegeneratePartitionError(DataError):
    """A relabeled training set contains only one of the two labels."""


class UndefinedDecisionError(McpartError, ArithmeticError):
    pass


class MethodError(McpartError, ValueError):
    """Solution method incompatible with the model's control spec."""


class SolverWarning(UserWarning):
    pass


class SingularSystemWarning(SolverWarning):
    pass


class IterationLimitWarning(SolverWarning):
    pass


class CalibrationSkipped(UserWarning):
    pass
