"""Exception hierarchy shared by all modules."""


class AfreeError(Exception):
    """Base class for every error raised by the toolkit."""


class ParseError(AfreeError):
    """Malformed operator source. Carries the character offset of the problem."""

    def __init__(self, message, position=None, source=None):
        self.position = position
        self.line = self.column = None
        if position is not None and source is not None:
            self.line = source.count("\n", 0, position) + 1
            self.column = position - (source.rfind("\n", 0, position) + 1) + 1
            message = f"{message} (line {self.line}, column {self.column})"
        super().__init__(message)


class DimensionError(AfreeError, ValueError):
    pass


class WeightsError(AfreeError):
    """The principal part admits no positive homogeneity weights."""

    def __init__(self, message, equation=None, system=None):
        self.equation = equation
        self.system = system
        super().__init__(message)


class Infeasible(WeightsError):
    pass


class NoPositiveSolution(WeightsError):
    pass


class ZeroFrequency(AfreeError, ValueError):
    pass


class HomogeneityViolated(AfreeError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class ZeroSingularPart(AfreeError):
    pass


class MeasureOutsideWindow(AfreeError):
    pass


class NotAFree(AfreeError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class CertificateFailed(AfreeError):
    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)
