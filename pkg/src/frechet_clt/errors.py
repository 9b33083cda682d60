"""Exception hierarchy shared by every module."""


class FrechetCLTError(Exception):
    """Base class for all library errors."""


class InvalidPoint(FrechetCLTError, ValueError):
    pass


class InvalidTangent(FrechetCLTError, ValueError):
    pass


class CutLocus(FrechetCLTError, ValueError):
    """A point lies on (or numerically next to) the cut locus of the base point."""


class DomainError(FrechetCLTError, ValueError):
    pass


class UnsupportedManifold(FrechetCLTError, TypeError):
    pass


class DegenerateModel(FrechetCLTError, ValueError):
    """The aggregate energy at the reference point vanishes."""


class SingularCorrection(FrechetCLTError, ValueError):
    """The Hessian correction matrix is numerically singular."""


class NonConvergence(FrechetCLTError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SizeMismatch(FrechetCLTError, ValueError):
    pass


class CapExceeded(FrechetCLTError, ValueError):
    pass


class ConfigError(FrechetCLTError, ValueError):
    pass
