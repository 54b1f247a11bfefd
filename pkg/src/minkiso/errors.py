"""Exception hierarchy shared by every module."""


class MinkisoError(Exception):
    """Base class for all errors raised by this package."""


class SignatureMismatch(MinkisoError, ValueError):
    pass


class NotSpacelike(MinkisoError, ValueError):
    """A tangent space (or subspace) failed the positive-definite Gram test.

    ``location`` carries whatever identifies the offending sample
    (parameter point, cell index, ...), or ``None``.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class IllConditioned(MinkisoError, ValueError):
    pass


class SlopeCapExceeded(MinkisoError, ValueError):
    pass


class Unsupported(MinkisoError, ValueError):
    pass


class BoundaryCurvatureUnavailable(MinkisoError, ValueError):
    pass


class MeshDegenerate(MinkisoError, ValueError):
    pass


class InvalidMesh(MinkisoError, ValueError):
    pass


class NotConnected(MinkisoError, ValueError):
    pass


class SolverFailure(MinkisoError, RuntimeError):
    pass


class SurjectivityViolation(MinkisoError, RuntimeError):
    pass


class ACondViolation(MinkisoError, RuntimeError):
    def __init__(self, message, magnitude=0.0):
        super().__init__(message)
        self.magnitude = magnitude


class BoundViolation(MinkisoError, RuntimeError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class EstimateInconclusive(MinkisoError, RuntimeError):
    pass


class TimelikeHViolation(MinkisoError, ValueError):
    pass


class FHInapplicable(MinkisoError, ValueError):
    pass


class RadiusTooLarge(MinkisoError, ValueError):
    pass
