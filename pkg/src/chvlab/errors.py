class ChvError(ValueError):
    """Base class for domain errors raised by chvlab."""


class DomainError(ChvError):
    pass


class InfeasibleScheduleError(ChvError):
    pass


class NumericalRankError(ChvError):
    pass


class EnumerationTooLargeError(ChvError):
    pass


class FormatError(ChvError):
    """Malformed, truncated or version-mismatched binary file."""


class RetryExhaustedError(ChvError):
    pass
