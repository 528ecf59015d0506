"""Exception hierarchy shared by all modules."""


class ModelError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(ModelError, ValueError):
    pass


class NonPositiveRate(InvalidParameter):
    pass


class OverdampedOscillator(InvalidParameter):
    pass


class NegativeOccupation(InvalidParameter):
    pass


class SingularSystem(ModelError):
    pass


class UnknownOutputIndex(ModelError, IndexError):
    pass


class ZeroSignalTransfer(ModelError):
    """The detected quadrature carries no position signal."""


class NoCoupling(ModelError):
    pass


class OutOfValidityBand(ModelError):
    pass


class BranchDiscontinuity(ModelError):
    pass


class AmbiguousRegime(ModelError):
    pass


class UnstableSystem(ModelError):
    pass


class ResolutionError(ModelError):
    pass


class InvalidSpec(ModelError, ValueError):
    pass


class ComputationError(ModelError):
    pass
