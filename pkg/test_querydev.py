"""
Unit tests for query development tooling.

Structure:
- Term and phrase suggestions
- Citation expansion, including a scripted neighbourhood oracle
- Review samples and worksheets
- Journal concentration

Run with: pytest test_querydev.py -v
"""

from __future__ import annotations

import csv
import logging
import math
import random

import pytest

from sdg.common import ConfigurationError, DataError, EmptyInputError, Provenance, SdgMapping
from sdg.corpus import PublicationRecord
from sdg.evaluation import read_worksheet
from sdg.query_dsl import parse
from sdg.query_engine import run_query_bank
from sdg.querydev import (
    WORKSHEET_COLUMNS,
    WorksheetRow,
    citation_expand,
    citation_graph,
    journal_concentration,
    render_journal_report,
    sample_for_review,
    suggest_phrases,
    suggest_terms,
    write_worksheet,
)


def sdg_mapping(sdg: int, ids) -> SdgMapping:
    mapping = SdgMapping()
    for rid in ids:
        mapping.assign(rid, sdg, Provenance.QUERY)
    return mapping


# ============================================================================
# SUGGESTION TESTS
# ============================================================================


class TestSuggestTerms:
    """Tests for TF-IDF term suggestions."""

    @pytest.fixture
    def microfinance(self, make_record, make_corpus):
        return make_corpus(
            make_record("d1", title="Microfinance study"),
            make_record("d2", title="Microfinance study"),
            make_record("d3", title="Study of water"),
            make_record("d4", title="Study of energy"),
        )

    # True Cases
    def test_distinctive_term_first(self, microfinance):
        """Suggest: A term only the positives share outranks corpus-wide terms."""
        ranked = suggest_terms({"d1", "d2"}, microfinance, k=10)
        assert [s.term for s in ranked[:2]] == ["microfinance", "study"]
        idf_micro = math.log(5 / 3) + 1
        norm = math.sqrt(idf_micro**2 + 1)
        assert ranked[0].score == pytest.approx(idf_micro / norm)
        assert ranked[1].score == pytest.approx(1 / norm)

    def test_shared_term_first(self, make_record, make_corpus):
        """Suggest: With every record positive, the shared term leads."""
        corpus = make_corpus(
            make_record("a", title="water"),
            make_record("b", title="water sanitation"),
            make_record("c", title="water drinking"),
        )
        assert suggest_terms(corpus.ids, corpus, k=1)[0].term == "water"

    def test_covered_flag(self, microfinance):
        """Suggest: Terms the query already contains are flagged."""
        query = parse('TITLE-ABS-KEY("microfin*")')
        flags = {s.term: s.covered for s in suggest_terms({"d1", "d2"}, microfinance, 10, query)}
        assert flags["microfinance"] is True
        assert flags["study"] is False

    def test_sorted_and_nonnegative(self, corpus):
        """Suggest: Scores are non-negative, descending, ties lexicographic."""
        ranked = suggest_terms(corpus.ids[:40], corpus, k=200)
        assert all(s.score >= 0 for s in ranked)
        keys = [(-s.score, s.term) for s in ranked]
        assert keys == sorted(keys)

    # False Cases
    def test_empty_positive_set(self, microfinance):
        """Suggest: An empty positive set is rejected."""
        with pytest.raises(EmptyInputError):
            suggest_terms([], microfinance)

    def test_unknown_id(self, microfinance):
        """Suggest: Positive ids must be in the corpus."""
        with pytest.raises(ConfigurationError):
            suggest_terms({"zz"}, microfinance)

    # Edge Cases
    def test_k_larger_than_vocabulary(self, microfinance):
        """Suggest: A large k returns the whole ranking."""
        ranked = suggest_terms({"d1"}, microfinance, k=50)
        assert sorted(s.term for s in ranked) == ["energy", "microfinance", "of", "study", "water"]

    def test_k_must_be_positive(self, microfinance):
        """Suggest: k must be at least 1."""
        with pytest.raises(ConfigurationError):
            suggest_terms({"d1"}, microfinance, k=0)


class TestSuggestPhrases:
    """Tests for author-keyword phrase suggestions."""

    def test_counts_once_per_record(self, make_record, make_corpus):
        """Phrases: Entries are normalised and counted once per record."""
        corpus = make_corpus(
            make_record("a", author_keywords=("Food Security", "food security", "malaria")),
            make_record("b", author_keywords=("food-security",)),
            make_record("c", author_keywords=("malaria",)),
        )
        ranked = suggest_phrases({"a", "b", "c"}, corpus)
        assert [(p.phrase, p.count) for p in ranked] == [("food security", 2), ("malaria", 2)]

    def test_covered_phrase(self, make_record, make_corpus):
        """Phrases: Literal query phrases are flagged."""
        corpus = make_corpus(make_record("a", author_keywords=("food security", "hunger")))
        query = parse('TITLE-ABS-KEY("food security")')
        flags = {p.phrase: p.covered for p in suggest_phrases({"a"}, corpus, query=query)}
        assert flags == {"food security": True, "hunger": False}

    def test_empty_positive_set(self, make_corpus):
        """Phrases: An empty positive set is rejected."""
        with pytest.raises(EmptyInputError):
            suggest_phrases([], make_corpus())


# ============================================================================
# CITATION EXPANSION TESTS
# ============================================================================


def random_citation_corpus(rng: random.Random, n: int = 50):
    ids = [f"n{i:02d}" for i in range(n)]
    records = []
    for rid in ids:
        others = [o for o in ids if o != rid]
        refs = tuple(sorted(rng.sample(others, rng.randint(0, 3))))
        records.append(PublicationRecord(id=rid, references=refs))
    return records


def scripted_neighbourhood(records, seeds: set[str]) -> set[str]:
    refs = {r.id: set(r.references) for r in records}
    out = set()
    for rid, cited in refs.items():
        if rid in seeds:
            continue
        if cited & seeds or any(rid in refs[s] for s in seeds):
            out.add(rid)
    return out


class TestCitationExpand:
    """Tests for one-hop citation expansion."""

    # True Cases
    def test_forward_edge(self, make_record, make_corpus):
        """Citations: Records citing the result set are returned."""
        corpus = make_corpus(make_record("A"), make_record("B", references=("A",)))
        assert citation_expand({"A"}, corpus) == {"B"}

    def test_backward_edge(self, make_record, make_corpus):
        """Citations: Records the result set cites are returned."""
        corpus = make_corpus(make_record("A", references=("C",)), make_record("C"))
        assert citation_expand({"A"}, corpus) == {"C"}

    def test_matches_scripted_oracle(self, make_corpus):
        """Citations: 20 seed sets on a 50-node graph match a scripted oracle."""
        rng = random.Random(42)
        records = random_citation_corpus(rng)
        graph = citation_graph(make_corpus(*records))
        ids = [r.id for r in records]
        for _ in range(20):
            seeds = set(rng.sample(ids, rng.randint(1, 8)))
            assert citation_expand(seeds, graph) == scripted_neighbourhood(records, seeds)

    # False Cases
    def test_whole_corpus(self, make_record, make_corpus):
        """Citations: Expanding the whole corpus finds nothing new."""
        corpus = make_corpus(make_record("A", references=("B",)), make_record("B"))
        assert citation_expand({"A", "B"}, corpus) == set()

    def test_two_hops_not_followed(self, make_record, make_corpus):
        """Citations: Expansion stops after one hop."""
        corpus = make_corpus(
            make_record("A", references=("B",)),
            make_record("B", references=("C",)),
            make_record("C"),
        )
        assert citation_expand({"A"}, corpus) == {"B"}

    # Edge Cases
    def test_outside_references_dropped(self, make_record, make_corpus):
        """Citations: References outside the corpus are ignored."""
        corpus = make_corpus(make_record("A", references=("X",)))
        graph = citation_graph(corpus)
        assert graph.number_of_edges() == 0
        assert citation_expand({"A"}, graph) == set()

    def test_unknown_seed(self, make_record, make_corpus):
        """Citations: Seeds outside the corpus contribute nothing."""
        corpus = make_corpus(make_record("A"))
        assert citation_expand({"Z"}, corpus) == set()

    def test_monotone_in_edges(self, make_corpus):
        """Citations: Adding an edge never shrinks the result."""
        rng = random.Random(7)
        records = random_citation_corpus(rng, 30)
        graph = citation_graph(make_corpus(*records))
        seeds = {"n00", "n05", "n17"}
        before = citation_expand(seeds, graph)
        for _ in range(10):
            a, b = rng.sample(sorted(graph.nodes), 2)
            graph.add_edge(a, b)
            after = citation_expand(seeds, graph)
            assert before <= after
            assert not after & seeds
            before = after


# ============================================================================
# REVIEW SAMPLE TESTS
# ============================================================================


class TestReviewSample:
    """Tests for seeded review samples."""

    # True Cases
    def test_deterministic(self):
        """Sample: The same seed draws the same worksheet."""
        mapping = sdg_mapping(3, [f"r{i:03d}" for i in range(500)])
        a = sample_for_review(mapping, 3, n=100, seed=11)
        b = sample_for_review(mapping, 3, n=100, seed=11)
        assert a == b
        assert len({r.id for r in a}) == 100

    def test_full_population_shuffled(self):
        """Sample: n equal to the population returns every record."""
        ids = [f"r{i:02d}" for i in range(20)]
        rows = sample_for_review(sdg_mapping(3, ids), 3, n=20, seed=1)
        assert sorted(r.id for r in rows) == ids

    def test_rows_carry_text(self, make_record, make_corpus):
        """Sample: Rows carry title and abstract with empty verdicts."""
        corpus = make_corpus(make_record("a", title="T", abstract="A"))
        (row,) = sample_for_review(sdg_mapping(5, ["a"]), 5, n=1, corpus=corpus)
        assert (row.id, row.title, row.abstract) == ("a", "T", "A")
        assert row.verdict_analyst_1 == row.verdict_analyst_2 == ""

    def test_worksheet_columns(self, tmp_path):
        """Sample: Worksheets carry the review columns."""
        path = tmp_path / "w.csv"
        write_worksheet(sample_for_review(sdg_mapping(3, ["a", "b"]), 3, n=2), path)
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == WORKSHEET_COLUMNS
        assert len(rows) == 3

    def test_filled_worksheet_reads_back(self, tmp_path):
        """Sample: A worksheet filled with verdicts feeds precision."""
        rows = sample_for_review(sdg_mapping(3, ["a", "b"]), 3, n=2)
        filled = [
            WorksheetRow(r.id, r.title, r.abstract, "relevant", "not_relevant") for r in rows
        ]
        path = tmp_path / "w.csv"
        write_worksheet(filled, path)
        assert sorted(a.record_id for a in read_worksheet(path)) == ["a", "b"]

    # False Cases
    def test_zero_size(self):
        """Sample: n must be at least 1."""
        with pytest.raises(ConfigurationError):
            sample_for_review(sdg_mapping(3, ["a"]), 3, n=0)

    def test_missing_record(self, make_corpus):
        """Sample: Sampled ids must exist in the corpus."""
        with pytest.raises(DataError):
            sample_for_review(sdg_mapping(3, ["a"]), 3, n=1, corpus=make_corpus())

    # Edge Cases
    def test_short_population_warns(self, caplog):
        """Sample: A small population is returned whole with a warning."""
        with caplog.at_level(logging.WARNING):
            rows = sample_for_review(sdg_mapping(3, ["a", "b", "c"]), 3, n=100)
        assert len(rows) == 3
        assert "below requested" in caplog.text

    def test_empty_population(self):
        """Sample: An SDG with no records gives an empty worksheet."""
        assert sample_for_review(SdgMapping(), 3, n=5) == []


# ============================================================================
# JOURNAL CONCENTRATION TESTS
# ============================================================================


class TestJournalConcentration:
    """Tests for per-journal match shares."""

    @pytest.fixture
    def journals(self, make_record, make_corpus):
        records = []
        for i in range(4):
            records.append(make_record(f"g{i}", journal_name="Gender & Development"))
        for i in range(10):
            records.append(make_record(f"w{i}", journal_name="World Development"))
        for i in range(3):
            records.append(make_record(f"p{i}", journal_name="Physical Review B"))
        return make_corpus(*records)

    # True Cases
    def test_share_ranking(self, journals):
        """Journals: 3 of 4 ranks above 5 of 10."""
        mapping = sdg_mapping(5, ["g0", "g1", "g2"] + [f"w{i}" for i in range(5)])
        rows = journal_concentration(mapping, 5, journals)
        assert [(r.journal, r.matched, r.total) for r in rows] == [
            ("Gender & Development", 3, 4),
            ("World Development", 5, 10),
        ]
        assert rows[0].share == 0.75
        assert "Gender & Development | 3 | 4 | 0.7500" in render_journal_report(rows)

    def test_single_journal_fully_matched(self, make_record, make_corpus):
        """Journals: A fully matched journal has share 1."""
        corpus = make_corpus(make_record("a", journal_name="Vaccine"), make_record("b", journal_name="vaccine"))
        (row,) = journal_concentration(sdg_mapping(3, ["a", "b"]), 3, corpus)
        assert (row.journal, row.total, row.share) == ("Vaccine", 2, 1.0)

    # False Cases
    def test_unmatched_journal_excluded(self, journals):
        """Journals: Journals without matches are left out."""
        rows = journal_concentration(sdg_mapping(5, ["g0"]), 5, journals)
        assert [r.journal for r in rows] == ["Gender & Development"]

    # Edge Cases
    def test_shares_in_unit_interval(self, corpus, bank, index):
        """Journals: Every share lies in (0, 1]."""
        mapping = run_query_bank(bank, index)
        rows = journal_concentration(mapping, 5, corpus)
        assert rows
        assert all(0.0 < r.share <= 1.0 for r in rows)
