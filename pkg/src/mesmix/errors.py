"""Exception hierarchy shared by all mesmix modules."""


class MesmixError(Exception):
    """Base class for every error raised by mesmix."""


class InvalidCurve(MesmixError):
    pass


class OutOfDomain(MesmixError):
    pass


class DomainMismatch(MesmixError):
    pass


class TemplateMismatch(MesmixError):
    """A node is wired inconsistently with its fixed port template."""


class NotContractible(MesmixError):
    pass


class NotMergeable(MesmixError):
    pass


class UnboundedVariable(MesmixError):
    """A variable that needs a finite upper bound (big-M coupling) has none."""


class NameTooLong(MesmixError):
    pass


class TooManyBinaries(MesmixError):
    pass


class InstanceError(MesmixError):
    """An instance file could not be parsed or failed validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class StageFailure(MesmixError):
    """A lexicographic stage ended without an optimal solution."""

    def __init__(self, stage, status, message=""):
        super().__init__(f"stage {stage} ended with status {status}" + (f": {message}" if message else ""))
        self.stage = stage
        self.status = status
