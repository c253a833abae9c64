"""Exception hierarchy shared by every module of the package."""


class PerturbedFixpointError(Exception):
    """Base class for all errors raised by the package."""


# -- expression language -------------------------------------------------------

class ParseError(PerturbedFixpointError, ValueError):
    """Malformed expression source. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte {offset})")
        self.message = message
        self.offset = offset


class ExprSyntaxError(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


class ArityError(ParseError):
    pass


class ForbiddenVariable(ParseError):
    pass


class IndexOutOfRange(ParseError):
    pass


class ExprShapeError(ParseError):
    """Expression yields a vector where a scalar is required, or vice versa."""


class EvaluationError(PerturbedFixpointError, ArithmeticError):
    pass


class DivisionNearZero(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


# -- spaces and maps ------------------------------------------------------------

class NonFinite(PerturbedFixpointError, ArithmeticError):
    pass


class FloorViolation(PerturbedFixpointError, ValueError):
    pass


class NegativeExact(PerturbedFixpointError, ValueError):
    pass


class NotQuotientMode(PerturbedFixpointError, ValueError):
    pass


class EmptyDomain(PerturbedFixpointError, ValueError):
    pass


class LeftDomain(PerturbedFixpointError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GridTooLarge(PerturbedFixpointError, ValueError):
    pass


class ProblemError(PerturbedFixpointError, ValueError):
    """Problem file is unreadable or structurally invalid."""


# -- certificates and the solver -------------------------------------------------

class NoInformativePairs(PerturbedFixpointError, ValueError):
    pass


class AlphaOutOfRange(PerturbedFixpointError, ValueError):
    pass


class BetaOutOfRange(PerturbedFixpointError, ValueError):
    pass


class NonPositiveFloor(PerturbedFixpointError, ValueError):
    pass


class InvalidCertificate(PerturbedFixpointError, ValueError):
    pass


class UntrustedFloor(PerturbedFixpointError, ValueError):
    """The floor c was estimated from samples and cannot back an error bound."""


class NotAFixedPoint(PerturbedFixpointError, ValueError):
    pass


class SolverStopped(PerturbedFixpointError):
    """Iteration ended without convergence; the partial trace is attached."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class MaxIterExceeded(SolverStopped):
    pass


class BoundBlowup(SolverStopped):
    pass


class UniquenessViolation(PerturbedFixpointError):
    def __init__(self, message, representatives):
        super().__init__(message)
        self.representatives = representatives
