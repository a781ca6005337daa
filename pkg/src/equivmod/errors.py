"""Exception hierarchy shared by all equivmod modules."""


class EquivmodError(Exception):
    """Base class for every error raised by this package."""


# numerics
class BaseMismatch(EquivmodError):
    pass


class DivisionByZeroConstantTerm(EquivmodError, ZeroDivisionError):
    pass


class OrderUnderflow(EquivmodError):
    pass


class BranchCutViolation(EquivmodError, ValueError):
    pass


# moebius
class SingularMatrix(EquivmodError, ValueError):
    pass


class AutomorphyFactorZero(EquivmodError, ZeroDivisionError):
    pass


class SamplerFailure(EquivmodError):
    pass


class DegeneratePoints(EquivmodError, ValueError):
    pass


class UnknownGenerator(EquivmodError, KeyError):
    pass


class NotInGamma2(EquivmodError, ValueError):
    pass


# qforms
class NotInUpperHalfPlane(EquivmodError, ValueError):
    pass


# schwarz
class CriticalPoint(EquivmodError):
    pass


class InsufficientJetOrder(EquivmodError, ValueError):
    pass


# ode
class SingularPoint(EquivmodError, ValueError):
    pass


class PathTooCloseToSingularity(EquivmodError):
    pass


class StepUnderflow(EquivmodError):
    pass


class NotClosed(EquivmodError, ValueError):
    pass


# equivariant
class DegenerateVmf(EquivmodError):
    pass


class FitFailure(EquivmodError):
    pass


class ConjugationMismatch(EquivmodError):
    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class DegenerateScalar(EquivmodError):
    pass


class ConstantCandidate(EquivmodError, ValueError):
    pass


# examples_monodromy
class SeriesDivergence(EquivmodError):
    pass


class CorrespondenceUnresolved(EquivmodError):
    pass
