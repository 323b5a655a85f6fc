"""Exception hierarchy shared by the library and the command-line harness."""


class GhzMetroError(Exception):
    """Base class for all errors raised by ghzmetro."""


class DomainError(GhzMetroError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(GhzMetroError, ValueError):
    """A run configuration is malformed or self-contradictory."""


class UnsupportedConfigurationError(DomainError):
    """The request is well formed but not covered by the implementation."""


class CapacityError(DomainError):
    """The brute-force oracle was asked for more qubits than it can hold."""


class SensitivityError(GhzMetroError, ArithmeticError):
    """The measured statistic does not depend on theta at this point."""


class NoInformationError(SensitivityError):
    """Quantum Fisher information vanishes, so no bound can be formed."""


class DegenerateMeasurementError(SensitivityError):
    """A two-outcome measurement has a deterministic outcome (P = 0 or 1)."""


class InternalConsistencyError(GhzMetroError, RuntimeError):
    """A numerical self-check failed; this indicates a bug, not bad input."""


class StepSizeError(GhzMetroError, ArithmeticError):
    """Finite-difference estimates at h and h/2 disagree."""
