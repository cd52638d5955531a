"""Exception hierarchy shared by all padyule modules."""


class PadyuleError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class DomainError(PadyuleError, ValueError):
    """An argument lies outside the domain of the requested function."""

    code = "domain_error"


class ConvergenceError(PadyuleError, ArithmeticError):
    """A series or iteration hit its term budget before converging."""

    code = "non_convergence"


class QuadratureError(ConvergenceError):
    """Adaptive quadrature exhausted its refinement budget."""

    code = "quadrature_non_convergence"


class UnsupportedRegimeError(PadyuleError, ValueError):
    code = "unsupported_regime"


class NormalizationError(PadyuleError, ValueError):
    code = "normalization_error"


class InsufficientSampleError(PadyuleError, ValueError):
    code = "insufficient_sample"
