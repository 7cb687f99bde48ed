"""Exception types shared across the package."""


class EdgeScatterError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(EdgeScatterError, ValueError):
    """Invalid configuration or precondition violation detectable before computing."""


class NumericsError(EdgeScatterError, RuntimeError):
    """A computation ran but failed to meet its tolerance or became singular."""


class NonConvergedEigensolve(NumericsError):
    """1D transverse eigensolve residual or structure check failed."""


class InsufficientQuadrature(NumericsError):
    """Stored quadrature cannot resolve the requested integrals."""


class IndexOutOfRange(EdgeScatterError, IndexError):
    """Level or channel index outside the constructed range."""


class TooCloseToCritical(ConfigError):
    """Energy within the guard distance of a critical (band-edge) energy."""


class BasisTooSmall(ConfigError):
    """Transverse basis does not reach the requested energy or level."""


class DecayViolation(NumericsError):
    """Sampled potential does not satisfy the declared <x>^-h decay."""


class NonRectangularGrid(ConfigError):
    """Tabulated potential values do not match the declared x/y grid."""


class NonFiniteSample(ConfigError):
    """Potential data contains NaN or infinity."""


class SingularSystem(NumericsError):
    """Global scattering solve is numerically singular (embedded eigenvalue or
    discretization too coarse)."""


class GuardViolation(ConfigError):
    """Solver called at an energy violating the critical-set guard."""


class MatchDefectTooLarge(NumericsError):
    """Boundary mode-matching defect above tolerance; increase the half-width
    or the number of retained evanescent channels."""


class SupportOutsideGrid(ConfigError):
    """Switch-function support extends beyond the stored x-grid."""


class WindowHitsCritical(ConfigError):
    """Energy window intersects the critical set."""


class TruncationDominates(NumericsError):
    """Spectral-completeness defect does not decrease under quadrature refinement."""
