"""
Shared fixtures: the synthetic corpus, its index and the bundled query bank.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from sdg.corpus import Corpus, PublicationRecord, build_index
from sdg.query_dsl import load_query_bank
from sdg.synthetic import generate_corpus

ROOT = Path(__file__).parent
QUERY_DIR = ROOT / "data" / "queries"


def record(rid: str, **fields) -> PublicationRecord:
    """Build a record with publication defaults for the fields not given."""
    fields.setdefault("year", 2020)
    return PublicationRecord(id=rid, **fields)


@pytest.fixture
def make_record():
    return record


@pytest.fixture
def make_corpus():
    def build(*records: PublicationRecord) -> Corpus:
        return Corpus.from_records(records)

    return build


@pytest.fixture(scope="session")
def synthetic():
    return generate_corpus(n_records=1200, seed=7)


@pytest.fixture(scope="session")
def corpus(synthetic) -> Corpus:
    return synthetic.corpus


@pytest.fixture(scope="session")
def index(corpus):
    return build_index(corpus)


@pytest.fixture(scope="session")
def bank():
    return load_query_bank(QUERY_DIR)


@pytest.fixture(scope="session")
def query_dir() -> Path:
    return QUERY_DIR
