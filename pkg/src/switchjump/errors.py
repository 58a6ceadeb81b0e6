"""Exception types shared across the toolkit."""


class SwitchJumpError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(SwitchJumpError):
    """Bad user-supplied configuration (nonpositive period, missing keys, ...)."""


class StructuralError(SwitchJumpError):
    """Model wiring is inconsistent (shape mismatch, period mismatch)."""


class DomainError(SwitchJumpError, ValueError):
    """Argument outside the operation's domain."""


class AssumptionError(SwitchJumpError):
    """A required structural assumption (Q1-style summability) fails."""


class TailDivergenceError(SwitchJumpError):
    """Regime sum over an unbounded function without a certified tail control."""


class NumericalBlowupError(SwitchJumpError):
    """Non-finite state encountered below the explosion cap."""

    def __init__(self, message, t=None, x=None, regime=None):
        super().__init__(message)
        self.t = t
        self.x = x
        self.regime = regime


class InsufficientDataError(SwitchJumpError):
    """Too few logged events to run the requested statistic."""


class EmptyLawError(SwitchJumpError):
    """No usable samples at the requested evaluation time."""


class EscapeDepthError(SwitchJumpError):
    """Escape-function construction ran out of scan depth; increase it."""
