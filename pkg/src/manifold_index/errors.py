"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for every error this package raises deliberately."""


class ParseError(PipelineError):
    """An input file failed to parse; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DuplicateQuoteError(ParseError):
    """Two rows share the same (ticker, date)."""


class EmptyUniverseError(PipelineError):
    """No tickers were loaded, or none survived screening."""


class NotCompletableError(PipelineError):
    """A series cannot be forward-filled: the first calendar value is absent."""


class NormalizationError(PipelineError):
    """A vector has zero (or non-finite) norm and cannot be unit-scaled."""


class ParameterError(PipelineError, ValueError):
    """An operation received an out-of-range or inconsistent parameter."""


class SingularMassError(PipelineError):
    """The mass matrix has a (near-)zero diagonal entry, i.e. an isolated point."""


class ConvergenceError(PipelineError):
    """The eigensolver did not reach the requested residual tolerance."""

    def __init__(self, message: str, worst_residual: float | None = None):
        if worst_residual is not None:
            message = f"{message} (worst residual {worst_residual:.3e})"
        super().__init__(message)
        self.worst_residual = worst_residual


class SizeError(PipelineError):
    """Problem exceeds the guard for the dense verification path."""


class InsufficientFeaturesError(PipelineError):
    """The eigenbasis ran out before enough feature points accumulated."""

    def __init__(self, found: int, requested: int):
        super().__init__(
            f"only {found} feature points found, {requested} requested; "
            "more eigenpairs are needed"
        )
        self.found = found
        self.requested = requested


class MissingPriceError(PipelineError):
    """A constituent has no price on a date the index needs."""

    def __init__(self, ticker: str, date):
        super().__init__(f"no price for {ticker} on {date}")
        self.ticker = ticker
        self.date = date


class DegenerateUniverseError(PipelineError):
    """Total constituent market cap is zero or negative."""


class InsufficientDataError(PipelineError):
    """Too few observations for the requested statistic."""


class AlignmentError(PipelineError):
    """Two series do not share the same dates or length."""


class UndefinedMetricError(PipelineError):
    """The metric is undefined for this input (constant series, zero variance)."""
