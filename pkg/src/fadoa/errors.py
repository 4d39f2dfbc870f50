"""Exception types raised across the package."""


class FadoaError(Exception):
    """Base class for all package errors."""


class SingularTrueAngle(FadoaError, ValueError):
    """The y-displacement equation is undefined (sin(theta) cos(phi) ~ 0)."""


class EmptyTrajectory(FadoaError, ValueError):
    """Every candidate in the search grid was singular."""


class DegenerateSubspace(FadoaError, ArithmeticError):
    """Covariance eigendecomposition failed or produced non-finite output."""


class RankDeficient(FadoaError, ArithmeticError):
    pass


class SingularFisher(FadoaError, ArithmeticError):
    pass


class ConfigError(FadoaError, ValueError):
    """Invalid experiment configuration."""
