"""Exception types raised across the package."""


class MPLabError(Exception):
    """Base class for all errors raised by mplab."""


class DomainError(MPLabError, ValueError):
    pass


class DegenerateQuadratic(MPLabError, ValueError):
    pass


class QuadratureNotConverged(MPLabError, ArithmeticError):
    pass


class InvalidShape(MPLabError, ValueError):
    pass


class NoConvergence(MPLabError, ArithmeticError):
    pass


class EmptySpectrum(MPLabError, ValueError):
    pass


class NotOrthonormal(MPLabError, ValueError):
    pass


class InadmissibleConfig(MPLabError, ValueError):
    """Smoothing parameters violate 2*v*H <= eps**1.5."""


class EpsilonTooLarge(MPLabError, ValueError):
    """The default window eps = (2 H v0)**(2/3) is not below sqrt(y)/2."""


class InsufficientData(MPLabError, ValueError):
    pass
