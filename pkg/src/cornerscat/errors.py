"""Exception types shared across the package."""


class CornerScatteringError(Exception):
    """Base class for all package-specific errors."""


# geometry
class EmptyDirectionCone(CornerScatteringError):
    """No probe direction satisfies the uniform-transversality bound."""


class EpsilonTooLarge(CornerScatteringError):
    """Requested corner radius exceeds half the shortest polygon edge."""


# fields
class DegenerateJet(CornerScatteringError):
    """All Taylor coefficients through the requested order vanish."""


class SingularSystem(CornerScatteringError):
    """Least-squares normal equations are rank deficient beyond regularization."""


# asymptotics
class PreconditionViolated(CornerScatteringError):
    """An operation's stated precondition does not hold for the inputs."""


class NonIntegrable(CornerScatteringError):
    """Radial power makes the corner integrand non-integrable at the vertex."""


class ZeroField(CornerScatteringError):
    """A field that must be nontrivial is identically zero."""


class ZeroSample(CornerScatteringError):
    """Decay fitting received a zero sample; log-scale fit undefined."""


# cgo
class EllipticityViolated(CornerScatteringError):
    """Principal coefficient dips to zero or below."""


class SymbolTooSmall(CornerScatteringError):
    """A discrete frequency lands too close to a real zero of the symbol."""


class NoContraction(CornerScatteringError):
    """Fixed-point iteration fails to contract (phase magnitude too small)."""


# forward solver
class SupportViolated(CornerScatteringError):
    """Coefficient contrast leaks outside the declared hull."""


class NoConvergence(CornerScatteringError):
    """Iterative solver hit its iteration cap before reaching tolerance."""


class ResolutionTooCoarse(CornerScatteringError):
    """Grid does not resolve the wavelength or the contrast support."""


class TestFieldInvalid(CornerScatteringError):
    """Test solution does not satisfy its PDE to the required tolerance."""

    __test__ = False  # not a pytest class despite the name


# experiments
class NoRootInInterval(CornerScatteringError):
    """Determinant scan found no sign change in the search interval."""
