"""Exception types raised across the package."""


class ElastoError(Exception):
    """Base class for all package errors."""


class BranchPointHit(ElastoError):
    pass


class ZeroArgument(ElastoError):
    pass


class OnBranchCut(ElastoError):
    """Evaluation requested on a branch cut, where the side is undefined."""


class RootSearchIncomplete(ElastoError):
    pass


class CertificateViolation(ElastoError):
    pass


class ToleranceNotMet(ElastoError):
    """Quadrature did not reach the requested tolerance.

    The best available result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DeterminantNearZero(ElastoError):
    pass


class DomainError(ElastoError):
    pass


class GridTooCoarse(ElastoError):
    pass


class StepUnstable(ElastoError):
    pass


class RayleighPole(ElastoError):
    pass


class CflViolation(ElastoError):
    pass


class DomainTooSmall(ElastoError):
    pass


class ConfigError(ElastoError):
    pass


class DivergentIntegral(ElastoError):
    """The integrand does not decay along an open contour, so the integral is undefined."""
