"""Exception hierarchy shared across pipeline stages.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
BackendError -> 3.
"""


class AiworkError(Exception):
    """Base class for all package errors."""


class ConfigError(AiworkError):
    """Invalid or inconsistent run configuration."""


class DataError(AiworkError):
    """Problem with input data or persisted stage artifacts."""


class IngestionError(DataError):
    """Fatal problem ingesting O*NET / BLS reference files."""


class CorpusError(DataError):
    """Fatal problem ingesting a conversation corpus."""


class StageError(DataError):
    """A pipeline stage was invoked before its prerequisites exist."""


class BackendError(AiworkError):
    """A classifier backend returned an unusable response."""


class BackendUnavailable(BackendError):
    """The backend cannot be reached at all; the run is resumable."""
