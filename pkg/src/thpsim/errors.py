"""Exception hierarchy shared by every thpsim module."""


class ThpError(Exception):
    """Base class for all errors raised by thpsim."""


class DimensionError(ThpError, ValueError):
    """Operands have incompatible shapes."""


class DomainError(ThpError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SupportError(DomainError):
    """A closed-form law was evaluated below the support where it is valid."""


class DegeneracyError(ThpError, ArithmeticError):
    """A vector or factor vanished where a nonzero value is required.

    ``iteration`` is set when the failure happens inside the scheduler.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class AccuracyError(ThpError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class CapacityError(ThpError, ValueError):
    """A request would allocate more memory than the configured guard allows."""


class InsufficientUsersError(ThpError, ValueError):
    """Fewer users than transmit antennas were offered to the scheduler."""


class InfeasibleError(ThpError, ValueError):
    """A tradeoff rule produced a parameter outside its feasible range."""


class StatisticalPowerError(ThpError, ValueError):
    """Too few samples to make a statistical statement."""


class ConfigError(ThpError, ValueError):
    """Malformed or unknown experiment configuration."""
