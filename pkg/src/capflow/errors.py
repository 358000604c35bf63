"""Exception types shared across the package.

Two broad families matter for the command line front end: bad inputs
(``ValidationError``, exit code 1) and numerical breakdowns
(``SolverFailure``, exit code 2).
"""


class CapflowError(Exception):
    """Base class for all package errors."""


class ValidationError(CapflowError):
    """Invalid inputs: bad rates, bad sets, infeasible candidates, ..."""


class SolverFailure(CapflowError):
    """A linear solve or eigenvalue computation lost too much accuracy."""


class NegativeRate(ValidationError):
    pass


class NotIrreducible(ValidationError):
    pass


class NotStationary(ValidationError):
    pass


class EmptyTargetSet(ValidationError):
    pass


class OverlappingSets(ValidationError):
    pass


class SupportMismatch(ValidationError):
    """A flow carries weight on an edge with zero conductance."""


class InfeasibleInputs(ValidationError):
    """Candidate (f, phi) violates boundary values or flow feasibility."""


class ExpressionSyntaxError(ValidationError):
    """Malformed field expression; carries the offending position."""

    def __init__(self, message, position, expected=None):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnknownIdentifier(ValidationError):
    pass


class DegenerateCritical(ValidationError):
    """A Hessian eigenvalue at a critical point is numerically zero."""


class NotASaddle(ValidationError):
    pass


class NotAMinimum(ValidationError):
    pass


class NonpositiveBarrier(ValidationError):
    pass


class UnequalMinima(ValidationError):
    """Global minima are not at equal height, violating the well setup."""


class WellMergeError(ValidationError):
    """Two minima fall in the same sublevel component; margin too small."""


class NoSaddle(ValidationError):
    pass


class EmptyWell(ValidationError):
    pass


class HorizonTooShort(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass
