"""Exception types raised across the package."""

__all__ = [
    "HystparError",
    "EstimationError",
    "SingularInformationError",
    "DegenerateTestError",
    "StudyError",
    "CsvParseError",
]


class HystparError(Exception):
    """Base class for package-specific failures."""


class EstimationError(HystparError):
    """Optimization did not produce a usable fit."""


class SingularInformationError(EstimationError):
    """The plug-in information matrix is singular or hopelessly ill-conditioned
    (for instance when one regime is never visited)."""


class DegenerateTestError(HystparError):
    """A separate-family test statistic is undefined, e.g. the two candidate
    intensity paths coincide everywhere."""


class StudyError(HystparError):
    """A Monte Carlo study is misconfigured (too many failed replicates)."""


class CsvParseError(HystparError):
    """Input data could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
