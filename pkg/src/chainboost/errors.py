"""Exception types shared across the package.

The CLI maps these onto its stable exit codes: ConfigError -> 2,
CompatibilityError -> 3, PartialDataError -> 4.
"""


class ChainboostError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ChainboostError):
    """Invalid configuration, unusable input file, or bad usage."""


class DataFormatError(ConfigError):
    """A corpus or input file could not be parsed.

    Carries an optional 1-based line number for the offending record.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CompatibilityError(ChainboostError):
    """Model and data disagree (label maps, class counts, ...)."""


class PartialDataError(ChainboostError):
    """A batch operation finished but skipped some records."""


class TrainingError(ChainboostError):
    """Training could not produce a usable model."""


class AugmenterError(ChainboostError):
    """An augmenter failed to generate variants for a sample."""

    def __init__(self, message, sample_id=None):
        if sample_id is not None:
            message = f"sample {sample_id}: {message}"
        super().__init__(message)
        self.sample_id = sample_id


class LabelParseError(ChainboostError):
    """A completion contained no label name, or more than one."""


class RemoteEndpointError(ChainboostError):
    """A remote completion endpoint kept failing after retries."""
