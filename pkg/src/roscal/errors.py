"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the service layer
and the CLI can map failures onto HTTP payloads and exit codes without
string matching.
"""


class RoscalError(Exception):
    """Base class for all library errors."""

    code = "error"


class InputValidationError(RoscalError, ValueError):
    """Caller passed values outside an operation's contract."""

    code = "validation"


class FileFormatError(InputValidationError):
    """Unparseable input file; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ProblemValidationError(InputValidationError):
    """A problem description violates one of its structural invariants."""


class EmptyDomainError(RoscalError):
    """A (sub)domain that must contain at least one point is empty."""

    code = "infeasible"


class RobustInfeasibleError(RoscalError):
    """The robust counterpart has no feasible point at the requested scale."""

    code = "infeasible"


class LPInfeasibleError(RoscalError):
    code = "infeasible"


class LPUnboundedError(RoscalError):
    """LP unbounded below; indicates a misconfigured (unbounded) domain."""

    code = "validation"


class SolverNonConvergenceError(RoscalError):
    """Iterative solver hit its budget; best iterate is attached."""

    code = "nonconvergence"

    def __init__(self, message: str, best_point=None, best_value=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value


class CalibrationStageError(RoscalError):
    """A calibration stage failed; wraps the underlying error with its stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"calibration stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def code(self):  # type: ignore[override]
        return getattr(self.cause, "code", "error")
