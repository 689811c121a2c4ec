"""
Unit tests for corpus loading, tokenization and the inverted index.

Structure:
- Record parsing and corpus files have True/False/Edge test cases
- Tokenization and token streams have their own classes
- The inverted index is checked against hand-built records

Run with: pytest test_corpus.py -v
"""

from __future__ import annotations

import json

import pytest

from sdg.common import (
    CorpusFormatError,
    DuplicateRecordError,
    RecordValidationError,
)
from sdg.corpus import (
    KEYWORD_GAP,
    Corpus,
    Field,
    PublicationRecord,
    build_index,
    keyword_stream,
    load_corpus,
    normalize_journal,
    normalize_text,
    tokenize,
    write_corpus,
)

PUBLICATION = {
    "id": "P1",
    "title": "Food security in arid regions",
    "abstract": "We study hunger and food insecurity.",
    "keywords": ["food security", "malaria"],
    "journal": "Food Policy",
    "asjc": [1102, 2739],
    "year": 2019,
}

COURSE = {
    "id": "C1",
    "title": "Introduction to Sustainable Energy",
    "description": "Solar, wind and grid storage for a low carbon economy.",
}


def write_lines(path, *objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


# ============================================================================
# RECORD TESTS
# ============================================================================


class TestPublicationRecord:
    """Tests for building records from corpus lines."""

    # True Cases
    def test_publication_shape(self):
        """Record: Publication line maps onto record fields."""
        rec = PublicationRecord.from_dict(PUBLICATION)
        assert rec.id == "P1"
        assert rec.author_keywords == ("food security", "malaria")
        assert rec.journal_name == "Food Policy"
        assert rec.asjc_codes == (1102, 2739)
        assert rec.fulltext_terms is None
        assert rec.references == ()
        assert rec.year == 2019

    def test_course_shape(self):
        """Record: Course description stands in for the abstract."""
        rec = PublicationRecord.from_dict(COURSE)
        assert rec.abstract.startswith("Solar, wind")
        assert rec.year is None
        assert rec.asjc_codes == ()
        assert rec.journal_name == ""

    def test_to_dict_round_trip(self):
        """Record: to_dict output parses back to an equal record."""
        rec = PublicationRecord.from_dict({**PUBLICATION, "references": ["P0"]})
        assert PublicationRecord.from_dict(rec.to_dict()) == rec

    def test_extra_keys_allowed(self):
        """Record: Caller-declared extra keys are ignored."""
        rec = PublicationRecord.from_dict({**PUBLICATION, "gold": [2]}, extra_keys=("gold",))
        assert rec.id == "P1"

    # False Cases
    def test_missing_key_rejected(self):
        """Record: Missing required key is rejected."""
        obj = dict(PUBLICATION)
        del obj["journal"]
        with pytest.raises(RecordValidationError, match="journal"):
            PublicationRecord.from_dict(obj)

    def test_unknown_key_rejected(self):
        """Record: Unknown key is rejected."""
        with pytest.raises(RecordValidationError, match="unknown"):
            PublicationRecord.from_dict({**PUBLICATION, "doi": "10.1/x"})

    def test_bad_asjc_code_rejected(self):
        """Record: ASJC codes must have four digits."""
        with pytest.raises(RecordValidationError):
            PublicationRecord.from_dict({**PUBLICATION, "asjc": [27]})

    def test_self_citation_rejected(self):
        """Record: A record cannot cite itself."""
        with pytest.raises(RecordValidationError, match="cites itself"):
            PublicationRecord.from_dict({**PUBLICATION, "references": ["P1"]})

    # Edge Cases
    def test_empty_id_rejected(self):
        """Record: Empty id is rejected."""
        with pytest.raises(RecordValidationError):
            PublicationRecord(id="")

    def test_boolean_year_rejected(self):
        """Record: Booleans are not accepted as integers."""
        with pytest.raises(RecordValidationError):
            PublicationRecord.from_dict({**PUBLICATION, "year": True})


class TestCorpusFiles:
    """Tests for loading and writing corpus files."""

    # True Cases
    def test_load_keeps_file_order(self, tmp_path):
        """Corpus: Records load in file order."""
        path = write_lines(tmp_path / "c.jsonl", PUBLICATION, COURSE)
        corpus = load_corpus(path)
        assert corpus.ids == ["P1", "C1"]
        assert "C1" in corpus
        assert corpus["P1"].title.startswith("Food")

    def test_write_then_load(self, tmp_path, corpus):
        """Corpus: A written corpus loads back unchanged."""
        path = tmp_path / "out.jsonl"
        write_corpus(corpus, path)
        assert load_corpus(path) == corpus

    def test_blank_lines_skipped(self, tmp_path):
        """Corpus: Blank lines are ignored."""
        path = tmp_path / "c.jsonl"
        path.write_text("\n" + json.dumps(PUBLICATION) + "\n\n", encoding="utf-8")
        assert len(load_corpus(path)) == 1

    # False Cases
    def test_invalid_json_reports_line(self, tmp_path):
        """Corpus: Invalid JSON reports its line number."""
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(PUBLICATION) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError) as err:
            load_corpus(path)
        assert err.value.line_no == 2

    def test_invalid_record_reports_line(self, tmp_path):
        """Corpus: Schema violations report their line number."""
        path = write_lines(tmp_path / "c.jsonl", {"id": "X"})
        with pytest.raises(CorpusFormatError) as err:
            load_corpus(path)
        assert err.value.line_no == 1

    def test_duplicate_id_named(self, tmp_path):
        """Corpus: Duplicate ids are rejected and named."""
        path = write_lines(tmp_path / "c.jsonl", PUBLICATION, COURSE, PUBLICATION)
        with pytest.raises(DuplicateRecordError) as err:
            load_corpus(path)
        assert err.value.record_id == "P1"
        assert err.value.line_no == 3

    # Edge Cases
    def test_duplicate_in_memory(self):
        """Corpus: In-memory construction also rejects duplicates."""
        rec = PublicationRecord(id="A")
        with pytest.raises(DuplicateRecordError):
            Corpus.from_records([rec, rec])

    def test_empty_file(self, tmp_path):
        """Corpus: An empty file gives an empty corpus."""
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert len(load_corpus(path)) == 0


# ============================================================================
# TOKENIZATION TESTS
# ============================================================================


class TestTokenize:
    """Tests for text normalisation."""

    # True Cases
    def test_lowercase_split(self):
        """Tokenize: Lowercases and splits on punctuation."""
        assert tokenize("Food Security, in Africa!") == ["food", "security", "in", "africa"]

    def test_hyphen_splits(self):
        """Tokenize: Hyphens separate tokens."""
        assert tokenize("low-carbon energy") == ["low", "carbon", "energy"]

    def test_digits_kept(self):
        """Tokenize: Digits belong to tokens."""
        assert tokenize("CO2 emissions in 2020") == ["co2", "emissions", "in", "2020"]

    def test_nfkc_folding(self):
        """Tokenize: Compatibility characters are folded."""
        assert tokenize("ﬁsheries") == ["fisheries"]

    # False Cases
    def test_no_stemming(self):
        """Tokenize: Plurals are not stemmed."""
        assert tokenize("Children child") == ["children", "child"]

    # Edge Cases
    def test_empty_text(self):
        """Tokenize: Empty text gives no tokens."""
        assert tokenize("") == []
        assert tokenize("  --  ") == []

    def test_underscore_splits(self):
        """Tokenize: Underscores separate tokens."""
        assert tokenize("water_quality") == ["water", "quality"]


class TestTokenStreams:
    """Tests for positional token streams."""

    @pytest.mark.parametrize(
        "text",
        ["Low-Carbon ﬁsheries, CO2!", "café  Straße_water", "", "ÅNGSTRÖM ½ 𝐁old", "a--b  c"],
    )
    def test_normalize_idempotent(self, text):
        """Streams: Normalising already-normalised text changes nothing."""
        once = normalize_text(text)
        assert normalize_text(" ".join(once.words)) == once

    def test_normalize_idempotent_on_corpus(self, corpus):
        """Streams: Every synthetic title and abstract is a fixed point after one pass."""
        for rec in corpus:
            for text in (rec.title, rec.abstract):
                once = normalize_text(text)
                assert normalize_text(" ".join(once.words)) == once, rec.id

    def test_text_positions(self):
        """Streams: Text tokens take positions 0, 1, 2, ..."""
        stream = normalize_text("Clean water access", Field.TITLE)
        assert stream.field is Field.TITLE
        assert stream.tokens == (("clean", 0), ("water", 1), ("access", 2))

    def test_keyword_gap(self):
        """Streams: Keyword entries are separated by the keyword gap."""
        stream = keyword_stream(["food security", "malaria"])
        assert stream.tokens == (
            ("food", 0),
            ("security", 1),
            ("malaria", 1 + KEYWORD_GAP),
        )

    def test_empty_keyword_skipped(self):
        """Streams: Keyword entries without tokens take no positions."""
        assert keyword_stream(["", "--", "malaria"]).tokens == (("malaria", 0),)

    def test_journal_normalisation(self):
        """Streams: Journal names are lowercased and whitespace collapsed."""
        assert normalize_journal("  Gender  and Development ") == "gender and development"


# ============================================================================
# INVERTED INDEX TESTS
# ============================================================================


class TestInvertedIndex:
    """Tests for the positional inverted index."""

    @pytest.fixture
    def small(self, make_record, make_corpus):
        return make_corpus(
            make_record(
                "A",
                title="Water and sanitation",
                abstract="Safe water for all",
                author_keywords=("wash",),
                journal_name="Water Research",
                asjc_codes=(2312,),
            ),
            make_record(
                "B",
                title="Wastewater treatment",
                abstract="water reuse",
                journal_name="water  research",
                asjc_codes=(2312, 2305),
            ),
        )

    # True Cases
    def test_postings_positions(self, small):
        """Index: Postings carry record, field and position."""
        index = build_index(small)
        water = [(p.record_id, p.field, p.position) for p in index.postings["water"]]
        assert ("A", Field.TITLE, 0) in water
        assert ("A", Field.ABSTRACT, 1) in water
        assert ("B", Field.ABSTRACT, 0) in water
        assert len(water) == 3

    def test_subject_and_journal_postings(self, small):
        """Index: Subject and normalised journal postings are filled."""
        index = build_index(small)
        assert index.subject_postings[2312] == frozenset({"A", "B"})
        assert index.subject_postings[2305] == frozenset({"B"})
        assert index.journal_postings["water research"] == frozenset({"A", "B"})
        assert index.doc_count == 2

    def test_expand_prefix(self, small):
        """Index: Prefix expansion returns sorted matching tokens."""
        index = build_index(small)
        assert index.expand_prefix("wa") == ["wash", "wastewater", "water"]
        assert index.expand_prefix("water") == ["water"]

    # False Cases
    def test_expand_unknown_prefix(self, small):
        """Index: Unknown prefix expands to nothing."""
        assert build_index(small).expand_prefix("zz") == []

    # Edge Cases
    def test_canonical_deterministic(self, corpus):
        """Index: Two builds serialise identically."""
        assert build_index(corpus).canonical() == build_index(corpus).canonical()

    def test_empty_corpus(self):
        """Index: An empty corpus gives an empty index."""
        index = build_index(Corpus())
        assert index.doc_count == 0
        assert index.terms == []
