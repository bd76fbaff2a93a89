"""Exception and warning types raised across the package."""


class RfDressError(Exception):
    """Base class for all package errors."""


class EvaluationOnWire(RfDressError):
    def __init__(self, position, segment=None):
        self.position = position
        self.segment = segment
        super().__init__(f"field evaluated on a current-carrying segment at r={list(position)}")


class ZeroStaticField(RfDressError):
    """The adiabatic frame is undefined where the static field vanishes."""


class NotApplicable(RfDressError):
    """Closed-form expression requested for inputs it does not cover."""


class Unsupported(RfDressError):
    pass


class ConvergenceNotReached(RfDressError):
    pass


class AllMasked(RfDressError):
    pass


class NoConvergence(RfDressError):
    pass


class SingleWell(RfDressError):
    def __init__(self, message, b=None, report=None):
        self.b = b
        self.report = report
        super().__init__(message)


class FitIllConditioned(RfDressError):
    pass


class NotAtCriticalPoint(RfDressError):
    def __init__(self, message, b=None):
        self.b = b
        super().__init__(message)


class DomainTooSmall(RfDressError):
    pass


class NoFringePeak(RfDressError):
    pass


class SchemaError(RfDressError):
    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class AliasingRisk(UserWarning):
    """Expanded cloud is large compared with the periodic FFT domain."""
