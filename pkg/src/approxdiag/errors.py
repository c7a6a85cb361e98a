"""Exception taxonomy shared across the package."""


class ApproxDiagError(Exception):
    """Base class for all package errors."""


class DomainError(ApproxDiagError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ApproxDiagError):
    """Requested value outside the range of an invertible function."""


class DimensionMismatchError(ApproxDiagError):
    """Vector or set dimension does not match the expected dimension."""


class UnboundedRegionError(ApproxDiagError):
    """A bounded region was required but an unbounded one was supplied."""


class ExprSyntaxError(ApproxDiagError):
    """Malformed dynamics expression; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ApproxDiagError):
    """Expression references an identifier outside x1..xn / u1..um."""


class EvaluationError(ApproxDiagError):
    """Guarded numeric failure while evaluating a dynamics expression."""


class NumericError(ApproxDiagError):
    """A simulation step produced a non-finite state."""


class ConfigError(ApproxDiagError):
    """Invalid system configuration document; carries the field path."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class ParamCheckError(ApproxDiagError):
    """Quantization parameters fail the certified-accuracy inequalities."""


class BoundExceededError(ApproxDiagError):
    """Reachable state escaped the declared exploration bound."""

    def __init__(self, coords, embedding, source=None, input_label=None):
        self.coords = tuple(coords)
        self.embedding = tuple(embedding)
        self.source = source
        self.input_label = input_label
        detail = f"state {self.coords} (embedding {self.embedding})"
        if source is not None:
            detail += f" reached from {tuple(source)} under input {input_label}"
        super().__init__(f"exploration bound exceeded: {detail}")


class FaultSpecError(ApproxDiagError):
    """Fault specification violates its preconditions (e.g. meets X0)."""


class ResourceLimitError(ApproxDiagError):
    """Brute-force enumeration request exceeds the configured guard."""


class NonDiagnosableError(ApproxDiagError):
    """Diagnoser synthesis requested for a non-diagnosable system."""


class InitialStateInBallError(ApproxDiagError):
    """An initial state lies inside the fault neighborhood ball."""


class InfeasibleObservationError(ApproxDiagError):
    """Observed output symbol is not producible by any consistent run."""


class EmptyErosionError(ApproxDiagError):
    """Eroded fault set is empty; refutation mode cannot proceed."""


class InternalInvariantError(ApproxDiagError):
    """A should-never-happen internal consistency check failed."""
