"""Occupational AI applicability scoring from conversation logs and O*NET data.

The package is organized as pipeline stages:

- :mod:`aiwork.taxonomy` -- O*NET ingestion and the SOC-merged occupation store
- :mod:`aiwork.workforce` -- task weights, occupation-IWA weights, workforce shares
- :mod:`aiwork.corpus` -- conversation transcript loading and sampling
- :mod:`aiwork.backends` -- pluggable classifier backends (mock and remote)
- :mod:`aiwork.classify` -- two-stage work-activity classification pipeline
- :mod:`aiwork.metrics` -- per-activity aggregates (shares, completion, scope, feedback)
- :mod:`aiwork.score` -- per-occupation AI applicability scores and analyses
- :mod:`aiwork.validation` -- human-annotation agreement (Cohen's kappa)
- :mod:`aiwork.report` -- machine-readable report tables
- :mod:`aiwork.cli` -- staged command-line orchestration
"""

from aiwork.errors import (
    AiworkError,
    BackendError,
    BackendUnavailable,
    ConfigError,
    CorpusError,
    DataError,
    IngestionError,
    StageError,
)

__version__ = "0.1.0"

__all__ = [
    "AiworkError",
    "BackendError",
    "BackendUnavailable",
    "ConfigError",
    "CorpusError",
    "DataError",
    "IngestionError",
    "StageError",
    "__version__",
]
