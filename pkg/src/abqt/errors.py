"""Exception hierarchy shared by the simulator modules."""


class ABQTError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ABQTError, ValueError):
    """Two states (or a state and a term) disagree on their mode count."""


class DegenerateStateError(ABQTError, ValueError):
    """A state has (numerically) zero norm, e.g. an impossible heralding branch."""


class GateWiringError(ABQTError, IndexError):
    """A gate references a mode that does not exist, or repeats a mode."""


class MeasurementWiringError(ABQTError, IndexError):
    """A detector references a mode that does not exist, or repeats a mode."""


class PreconditionError(ABQTError, ValueError):
    """An operation was called on an input outside its contract (e.g. unnormalized)."""


class HeterogeneousClassError(ABQTError, ValueError):
    """The heralded state is not the same pure state for every count in a class."""


class FactorizationError(ABQTError, ValueError):
    """A state expected to be a product across a bipartition is entangled."""


class NoCorrectionError(ABQTError, KeyError):
    """No correction is defined for an ambiguous detection pattern."""


class CutoffTooSmallError(ABQTError, ValueError):
    """Fock truncation loses more probability mass than the configured tolerance."""

    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class ConfigError(ABQTError, ValueError):
    """A scenario configuration field is missing or invalid."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class CircuitSyntaxError(ABQTError, ValueError):
    """A circuit description could not be parsed; carries a 1-based source location."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column
