"""Exception types shared across the package."""


class FraclapError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FraclapError):
    """Invalid configuration value or missing key."""


class EvaluationError(FraclapError):
    """A pointwise evaluation failed (zero argument, out-of-table radius, ...)."""


class AssemblyError(FraclapError):
    """Quadrature failed to converge for an element pair."""


class SpectralError(FraclapError):
    """Eigensolver failed to converge."""


class NumericError(FraclapError):
    """Optimization or quadrature diverged."""


class HypothesisError(FraclapError):
    """A theorem hypothesis is structurally inapplicable (not a mere fail verdict)."""
