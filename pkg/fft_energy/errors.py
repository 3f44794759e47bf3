"""
Exception hierarchy for fft_energy.

Every error belongs to one of three families whose ``exit_code`` is the
stable command-line contract: input/parse errors exit with 2, analysis
errors with 3 and configuration errors with 4. All of them are also
``ValueError`` subclasses.
"""

from typing import Optional


class FftEnergyError(ValueError):
    """Base class of all fft_energy errors."""

    exit_code = 1


class InputError(FftEnergyError):
    """A log, manifest or other input could not be read."""

    exit_code = 2


class ParseError(InputError):
    """A malformed row or line in a log file."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        super().__init__(message)

    def __str__(self) -> str:
        message = super().__str__()
        location = []
        if self.source:
            location.append(self.source)
        if self.line is not None:
            location.append(f"line {self.line}")
        if location:
            return f"{':'.join(location)}: {message}"
        return message

    def with_source(self, source: str) -> "ParseError":
        """Return a copy of the error tagged with the file it came from."""
        return type(self)(super().__str__(), line=self.line, source=source)


class OrderError(ParseError):
    """Power sample timestamps go backwards."""


class MissingInput(InputError):
    """A referenced file does not exist."""


class AnalysisError(FftEnergyError):
    exit_code = 3


class AttributionError(AnalysisError):
    """A kernel interval has no overlapping power sample."""


class InsufficientData(AnalysisError):
    pass


class NoData(AnalysisError):
    pass


class MissingClockData(AnalysisError):
    """Samples carry no core clock column."""


class InvalidEnergy(AnalysisError):
    pass


class DegenerateData(AnalysisError):
    pass


class MissingReference(AnalysisError):
    """The boost/base reference point is absent from a sweep."""


class InvalidDuration(AnalysisError):
    pass


class BatchTooSmall(AnalysisError):
    """The memory budget cannot hold a single transform."""


class ConfigError(FftEnergyError):
    exit_code = 4


class GridMismatch(ConfigError):
    """A step pattern does not land exactly on f_min."""


class GridError(ConfigError):
    """A frequency is not a member of the device grid."""


class ConfigMismatch(ConfigError):
    """Runs that must share a configuration do not."""


class InvalidPipeline(ConfigError):
    pass


class UnknownDevice(ConfigError):
    pass


class CatalogError(ConfigError):
    pass
