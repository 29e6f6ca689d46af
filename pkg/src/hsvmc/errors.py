"""Exception types raised across the package."""


class HsvmcError(Exception):
    """Base class for all package errors."""


class GeometryError(HsvmcError, ValueError):
    """Interaction range incompatible with the periodic box (2*ell > L)."""


class NoBracket(HsvmcError, ValueError):
    pass


class NonConvergence(HsvmcError, RuntimeError):
    pass


class OverlapError(HsvmcError, ValueError):
    """Configuration violates the hard-core condition."""


class PackingError(HsvmcError, ValueError):
    pass


class DomainError(HsvmcError, ValueError):
    pass


class InsufficientData(HsvmcError, ValueError):
    pass


class ConfigError(HsvmcError, ValueError):
    pass
