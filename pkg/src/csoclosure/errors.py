"""Exception hierarchy shared by the library and the CLI exit codes."""


class CSOError(Exception):
    exit_code = 1


class DomainError(CSOError, ValueError):
    """Input outside an operation's domain (negative weight, n < 1, ...)."""

    exit_code = 2


class SearchExhaustedError(CSOError):
    """A bounded search found nothing; ``best`` carries the closest miss."""

    exit_code = 3

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ResourceLimitError(CSOError):
    exit_code = 3

    def __init__(self, message: str, completed=None):
        super().__init__(message)
        self.completed = completed


class ContractViolation(CSOError):
    """An oracle answer failed re-verification."""

    exit_code = 3


class ConsistencyError(CSOError):
    """An internal invariant of a construction did not hold."""

    exit_code = 3


class CertificateError(CSOError):
    exit_code = 4

    def __init__(self, message: str, failures=()):
        super().__init__(message)
        self.failures = list(failures)
