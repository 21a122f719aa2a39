"""Exception hierarchy shared across the package."""


class ShieldedLMCError(Exception):
    """Base class for all package errors."""


class DomainError(ShieldedLMCError, ValueError):
    """An input lies outside the domain of a formula (e.g. U <= 0)."""


class NumericalFailure(ShieldedLMCError, ArithmeticError):
    """A sampler state or drift became non-finite.

    Parameters
    ----------
    message : str
    step : int, optional
        Iteration index at which the failure was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class ConfigError(ShieldedLMCError, ValueError):
    """Invalid sampler or experiment configuration."""


class UnsupportedOperation(ShieldedLMCError, NotImplementedError):
    """The object lacks a capability the caller asked for."""


class InitializationError(ShieldedLMCError, RuntimeError):
    """No feasible initial state could be drawn."""


class DegenerateConstraintError(ShieldedLMCError, RuntimeError):
    """Rejection sampling accepted too few proposals to finish."""


class DetectionError(ShieldedLMCError, RuntimeError):
    """Every candidate chain of a detector failed."""
