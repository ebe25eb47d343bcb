"""Exception hierarchy for RsesTrial

Every error carries the process exit code the CLI reports for it.
"""


class RsesError(Exception):
    """Base class for all RsesTrial errors"""

    exit_code = 1


class DomainError(RsesError, ValueError):
    """Argument outside the domain of an operation"""

    exit_code = 2


class DataFormatError(RsesError):
    """Malformed input data row"""

    exit_code = 2

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ScenarioConfigError(RsesError):
    """Scenario file does not validate"""

    exit_code = 2


class UndefinedDesignError(DomainError):
    """Sample size requested for an alternative without any group difference"""


class DegenerateStatisticError(RsesError):
    """Test statistic has zero variance and cannot be evaluated"""

    exit_code = 3


class NumericalError(RsesError):
    """Root finding or iterative search did not converge"""

    exit_code = 3
