"""Exception hierarchy for the momsec toolkit."""


class MomsecError(Exception):
    """Base class for all errors raised by this package."""


class ExprError(MomsecError):
    """Base class for expression parsing errors."""

    def __init__(self, message, position=None, source=None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    """Malformed expression source."""


class UnknownIdentifierError(ExprError):
    """Identifier not declared in the chart the expression is bound to."""

    def __init__(self, name, position=None, source=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position, source)


class EvaluationDomainError(MomsecError):
    """Partial function evaluated outside its domain (log/sqrt/div)."""

    def __init__(self, message, point=None):
        self.point = point
        if point is not None:
            message = f"{message} at point {tuple(point)}"
        super().__init__(message)


class JetMismatchError(MomsecError):
    """Jet operands live in different spaces (dimension or order)."""


class InsufficientJetOrderError(MomsecError):
    """A derivative was requested from a jet that carries none.

    Raised instead of silently falling back to finite differences when the
    configured jet order is too small for an operation (e.g. curvature).
    """


class ChartMismatchError(MomsecError):
    """Fields bound to different charts were combined."""


class ValidationError(MomsecError):
    """A structural invariant failed at a sample point."""

    def __init__(self, message, point=None, residual=None):
        self.point = point
        self.residual = residual
        parts = [message]
        if point is not None:
            parts.append(f"at point {tuple(point)}")
        if residual is not None:
            parts.append(f"(residual {residual:.3e})")
        super().__init__(" ".join(parts))


class PreconditionError(MomsecError):
    """An operation's stated precondition does not hold."""


class SchemaError(MomsecError):
    """Scenario file violates the documented schema."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
