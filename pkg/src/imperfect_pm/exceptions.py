"""Exception hierarchy shared by all modules."""


class ImperfectPMError(Exception):
    """Base class for all package errors."""


# --- event logs -------------------------------------------------------------


class EventLogError(ImperfectPMError, ValueError):
    """Invalid event log. ``line`` is the 1-based CSV line when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRow(EventLogError):
    pass


class MissingCensor(EventLogError):
    pass


class DuplicateCensor(EventLogError):
    pass


class NonMonotonicTimes(EventLogError):
    pass


class UnknownEventType(EventLogError):
    pass


class NegativeTime(EventLogError):
    pass


class EventAfterCensor(EventLogError):
    pass


# --- model evaluation --------------------------------------------------------


class NegativeAge(ImperfectPMError, ValueError):
    pass


class SingularHazard(ImperfectPMError, ValueError):
    pass


class EpsilonZero(ImperfectPMError, ValueError):
    pass


class EpsilonOne(ImperfectPMError, ValueError):
    pass


class SeriesDiverged(ImperfectPMError, ArithmeticError):
    pass


# --- estimation / selection ---------------------------------------------------


class NonFiniteStart(ImperfectPMError, ValueError):
    pass


class AllStartsFailed(ImperfectPMError, RuntimeError):
    pass


class RefitFailed(ImperfectPMError, RuntimeError):
    pass


# --- optimization -------------------------------------------------------------


class Infeasible(ImperfectPMError, RuntimeError):
    pass


class DegenerateAnchors(ImperfectPMError, ValueError):
    pass


class EmptyFront(ImperfectPMError, RuntimeError):
    pass
