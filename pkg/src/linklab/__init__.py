"""Truth-data construction and evaluation toolkit for author name disambiguation.

The package builds labeled evaluation datasets by record linkage against
authority profiles, grant PI tables, and self-citation edges; scores
clusterings with B-cubed metrics and pair accuracy; profiles dataset
representativeness; and generates synthetic corpora with planted ground
truth for end-to-end checks.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    EvaluationError,
    IngestError,
    LinklabError,
    ParseError,
)

__all__ = [
    "ConfigError",
    "EvaluationError",
    "IngestError",
    "LinklabError",
    "ParseError",
    "__version__",
]
