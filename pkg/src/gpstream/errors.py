"""Exception types shared across the package."""


class GpstreamError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(GpstreamError, ValueError):
    """Operand shapes are inconsistent."""


class NotSymmetricError(GpstreamError, ValueError):
    """A matrix required to be symmetric is not."""


class NotPositiveDefiniteError(GpstreamError, ArithmeticError):
    """Cholesky factorization failed even at the maximum allowed jitter."""


class NonConvergenceError(GpstreamError, RuntimeError):
    """An iterative fit exhausted its iteration budget far from a solution."""


class KernelKindMismatchError(GpstreamError, TypeError):
    """An operation requiring a specific kernel family got another one."""


class NonFiniteLossError(GpstreamError, ArithmeticError):
    """Training loss became NaN or infinite (learning-rate blow-up)."""


class DomainError(GpstreamError, ValueError):
    """A scalar argument lies outside its mathematical domain."""


class IndexOutOfRangeError(GpstreamError, IndexError):
    """A feature or sample index is out of range."""


class EmptyBufferError(GpstreamError, ValueError):
    """The rolling buffer holds no samples."""


class ParseError(GpstreamError, ValueError):
    """CSV cell failed to parse; carries 1-based row/column location."""

    def __init__(self, message: str, row: int, column: int):
        super().__init__(f"{message} (row {row}, column {column})")
        self.row = row
        self.column = column


class UnknownLabelValueError(GpstreamError, ValueError):
    """A label value is absent from the label mapping."""


class MissingColumnError(GpstreamError, ValueError):
    """The requested column does not exist in the file."""


class InsufficientRowsError(GpstreamError, ValueError):
    """A dataset split would leave some part empty."""


class SingleClassError(GpstreamError, ValueError):
    """Labels contain a single class where both are required."""


class OnlineStepError(GpstreamError, RuntimeError):
    """A model fit failed during the online loop; carries the step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"model fit failed at step {step}: {cause}")
        self.step = step
        self.cause = cause
