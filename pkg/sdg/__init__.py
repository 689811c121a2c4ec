"""
SDG mapping of publication metadata.

Modules:
- corpus: Records, tokenization and the positional inverted index
- query_dsl: Boolean query language, AST and query banks
- query_engine: Naive and indexed query evaluation
- classifier: TF-IDF features and one-vs-rest logistic regression
- combiner: Query/model union and provenance reporting
- evaluation: Metrics, acceptance gate, precision and recall estimates
- querydev: Term suggestion, citation expansion, review samples
- synthetic: Deterministic synthetic corpus
"""

from .common import (
    SDG_IDS,
    ConfigurationError,
    DataError,
    Provenance,
    QuerySyntaxError,
    SdgMapperError,
    SdgMapping,
    TrainingError,
    UsageError,
)
from .corpus import Corpus, Field, PublicationRecord, build_index, load_corpus
from .query_dsl import QueryBank, load_query_bank, parse, render
from .query_engine import execute, matches, run_query_bank

__all__ = [
    "SDG_IDS",
    "ConfigurationError",
    "DataError",
    "Provenance",
    "QuerySyntaxError",
    "SdgMapperError",
    "SdgMapping",
    "TrainingError",
    "UsageError",
    "Corpus",
    "Field",
    "PublicationRecord",
    "build_index",
    "load_corpus",
    "QueryBank",
    "load_query_bank",
    "parse",
    "render",
    "execute",
    "matches",
    "run_query_bank",
]
