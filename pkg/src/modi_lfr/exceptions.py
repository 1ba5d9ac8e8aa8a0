"""Exception types raised across the package."""


class ModiError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ModiError, ValueError):
    """A parameter vector violates its model's constraints."""


class DomainError(ModiError, ValueError):
    """An argument lies outside the domain of the requested function."""


class DegenerateDataError(ModiError, ValueError):
    """The sample cannot support the requested computation."""


class QuadratureError(ModiError, ArithmeticError):
    """Numerical integration failed to reach the requested tolerance.

    The best available estimate is kept in ``estimate`` together with the
    integrator's error bound in ``abserr``.
    """

    def __init__(self, message, estimate=float("nan"), abserr=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class DivergenceError(ModiError, ArithmeticError):
    """An integral or expectation does not converge."""


class UnderflowError(ModiError, ArithmeticError):
    """A conditioning probability is too small to divide by."""


class NonFiniteLikelihoodError(ModiError, ArithmeticError):
    """The log-likelihood is not finite at a required evaluation point."""


class FitError(ModiError, RuntimeError):
    """Every optimizer start failed."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class SingularInformationError(ModiError, ArithmeticError):
    """The observed information matrix could not be inverted."""


class MissingCovarianceError(ModiError, ValueError):
    """Wald intervals were requested from a fit without a covariance."""


class ScenarioInfeasibleError(ModiError, RuntimeError):
    """Too many simulation replicates failed to converge."""
