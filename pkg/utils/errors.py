class VarLpError(Exception):
    """Base class for every error raised by the library."""


class DomainError(VarLpError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class ShapeError(VarLpError, ValueError):
    """Vector, ladder or matrix dimensions do not fit together."""


class SpecError(VarLpError, ValueError):
    """A SeminormSpec violates its invariants."""


class PreconditionError(VarLpError, ValueError):
    """An operation was called outside its documented precondition."""


class SchemaError(VarLpError, ValueError):
    """A JSON document does not match the versioned input schema."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class RankDeficiencyError(VarLpError):
    """The basis handed to a distortion estimate is (numerically) degenerate."""


class BudgetExceededError(VarLpError):
    """An iteration, placement or stage budget ran out.

    Args:
        message: Human readable description
        trace: Optional partial results collected before the budget ran out
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DistortionError(VarLpError):
    """A two-sided distortion inequality failed for a constructed embedding."""
