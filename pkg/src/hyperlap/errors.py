"""Exception hierarchy shared by all hyperlap modules."""


class HyperlapError(Exception):
    """Base class for all library errors."""


# geometry
class ImproperCone(HyperlapError):
    """Cone is not contained in any open half space; dual open cone is empty."""


class EmptyHPC(HyperlapError):
    """No supplied direction lies in the half-plane-at-infinity set."""


# analytic expressions
class ExprSyntaxError(HyperlapError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UnknownIdentifier(HyperlapError):
    pass


class DomainError(HyperlapError):
    """Sample point lies outside the declared wedge/domain."""


# hyperfunctions
class GrowthMismatch(HyperlapError):
    """Test density decay does not dominate the term growth on the contour."""


class DomainMismatch(HyperlapError):
    pass


class SupportLeak(HyperlapError):
    """Cutoff plateau fails to cover the claimed support."""


# quadrature / chains
class NoConvergence(HyperlapError):
    """Adaptive bisection hit maximum depth before meeting the tolerance."""


class MissingDampingCertificate(HyperlapError):
    """Unbounded segment carries no exponential damping certificate."""


class MarginViolation(HyperlapError):
    """Chain passes closer to a declared zero/pole than the requested margin."""


# laplace
class OutOfRegion(HyperlapError):
    """Evaluation point violates the transform convergence margin."""


class ConvergenceFail(HyperlapError):
    """No admissible anchor R found below the cap."""


class GrowthCertificateFail(HyperlapError):
    pass


# opcalc
class ZeroOperator(HyperlapError):
    pass


class DegreeOverflow(HyperlapError):
    pass


class CoefficientMismatch(HyperlapError):
    """Certificate h != sum a_j P_j."""


class CapTooSmall(HyperlapError):
    pass


class SolvabilityFail(HyperlapError):
    pass


class PoleOnChain(HyperlapError):
    pass


# cli
class ConfigError(HyperlapError):
    pass
