"""Exception hierarchy shared by all pathlaw modules."""


class PathlawError(Exception):
    """Base class for every error raised by pathlaw."""


class PathError(PathlawError, ValueError):
    """Malformed piecewise-linear path input."""


class NonMonotoneTimes(PathError):
    pass


class LengthMismatch(PathError):
    pass


class EmptyPath(PathError):
    pass


class OutOfDomain(PathlawError, ValueError):
    """A time lies outside ``[0, horizon]``."""


class HorizonMismatch(PathlawError, ValueError):
    pass


class EmptyInput(PathlawError, ValueError):
    pass


class NumericalRange(PathlawError, ArithmeticError):
    """Inputs are too large for the log-space evaluation to stay finite."""


class RejectionBudgetExceeded(PathlawError, RuntimeError):
    """Rejection sampling ran out of attempts.

    The acceptance probability is too low for the configured budget; reduce
    the horizon or move the endpoints away from the barrier.
    """


class TooFewSamples(PathlawError, ValueError):
    pass


class ShapeMismatch(PathlawError, ValueError):
    pass


class DomainError(PathlawError, ValueError):
    pass


class UnknownScenario(PathlawError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidParams(PathlawError, ValueError):
    pass


class InvalidSelector(PathlawError, IndexError):
    pass
