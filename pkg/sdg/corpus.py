"""
Publication corpus: records, tokenization and the positional inverted index.

Records are read from line-delimited JSON. Text is normalised into
position-annotated token streams (TITLE, ABSTRACT, KEYWORDS), and the
inverted index maps every token to its (record, field, position) postings
so the query engine can evaluate phrases and proximity operators without
rescanning the text.
"""

from __future__ import annotations

import bisect
import json
import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, NamedTuple

from .common import (
    CorpusFormatError,
    DuplicateRecordError,
    RecordValidationError,
)

log = logging.getLogger(__name__)

# Gap between consecutive author-keyword entries in the KEYWORDS stream
KEYWORD_GAP = 2

PUBLICATION_KEYS = frozenset(
    {
        "id",
        "title",
        "abstract",
        "keywords",
        "journal",
        "asjc",
        "fulltext_terms",
        "references",
        "year",
    }
)
OPTIONAL_KEYS = frozenset({"fulltext_terms", "references"})
COURSE_REQUIRED = frozenset({"id", "title", "description"})

_TOKEN_RE = re.compile(r"[^\W_]+")


class Field(str, Enum):
    TITLE = "TITLE"
    ABSTRACT = "ABSTRACT"
    KEYWORDS = "KEYWORDS"


ALL_FIELDS = frozenset(Field)


# ============================================================================
# RECORDS
# ============================================================================


@dataclass(frozen=True, slots=True)
class PublicationRecord:
    """
    Metadata of one publication (or course).

    Attributes:
        id: Opaque, non-empty identifier, unique within a corpus
        title: Title text
        abstract: Abstract text (course description for course records)
        author_keywords: Author keyword entries, one phrase each
        journal_name: Name of the publishing journal
        asjc_codes: 4-digit ASJC subject codes of the journal
        fulltext_terms: Main terms extracted from the full text, if any
        references: Ids of records this record cites
        year: Publication year (None for course records)
    """

    id: str
    title: str = ""
    abstract: str = ""
    author_keywords: tuple[str, ...] = ()
    journal_name: str = ""
    asjc_codes: tuple[int, ...] = ()
    fulltext_terms: tuple[str, ...] | None = None
    references: tuple[str, ...] = ()
    year: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise RecordValidationError("record id must be a non-empty string")
        for code in self.asjc_codes:
            if not isinstance(code, int) or not 1000 <= code <= 9999:
                raise RecordValidationError(
                    f"record {self.id!r}: ASJC code {code!r} outside [1000, 9999]"
                )
        if self.id in self.references:
            raise RecordValidationError(f"record {self.id!r} cites itself")

    @classmethod
    def from_dict(
        cls, obj: dict[str, Any], extra_keys: Iterable[str] = ()
    ) -> PublicationRecord:
        """
        Build a record from one decoded corpus line.

        Two shapes are accepted: the publication shape (keys `id, title,
        abstract, keywords, journal, asjc, year` plus optional
        `fulltext_terms, references`) and the course shape, where
        `description` stands in for `abstract`.

        Args:
            obj: Decoded JSON object
            extra_keys: Additional keys the caller handles (e.g. `gold`)

        Raises:
            RecordValidationError: On missing, unknown or mistyped keys
        """
        if not isinstance(obj, dict):
            raise RecordValidationError("record must be a JSON object")
        keys = set(obj) - set(extra_keys)

        if "description" in keys:
            missing = COURSE_REQUIRED - keys
            allowed = (PUBLICATION_KEYS - {"abstract"}) | {"description"}
            abstract = obj["description"]
        else:
            missing = PUBLICATION_KEYS - OPTIONAL_KEYS - keys
            allowed = PUBLICATION_KEYS
            abstract = obj.get("abstract")
        if missing:
            raise RecordValidationError(f"missing keys: {sorted(missing)}")
        unknown = keys - allowed
        if unknown:
            raise RecordValidationError(f"unknown keys: {sorted(unknown)}")

        fulltext = obj.get("fulltext_terms")
        year = obj.get("year")
        return cls(
            id=_text(obj["id"], "id"),
            title=_text(obj["title"], "title"),
            abstract=_text(abstract, "abstract"),
            author_keywords=_text_list(obj.get("keywords") or [], "keywords"),
            journal_name=_text(obj.get("journal") or "", "journal"),
            asjc_codes=tuple(_int(c, "asjc") for c in obj.get("asjc") or []),
            fulltext_terms=None
            if fulltext is None
            else _text_list(fulltext, "fulltext_terms"),
            references=_text_list(obj.get("references") or [], "references"),
            year=None if year is None else _int(year, "year"),
        )

    def to_dict(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "keywords": list(self.author_keywords),
            "journal": self.journal_name,
            "asjc": list(self.asjc_codes),
            "year": self.year,
        }
        if self.fulltext_terms is not None:
            obj["fulltext_terms"] = list(self.fulltext_terms)
        if self.references:
            obj["references"] = list(self.references)
        return obj


def _text(value: Any, key: str) -> str:
    if value is None:
        return ""
    if not isinstance(value, str):
        raise RecordValidationError(f"{key} must be a string")
    return value


def _text_list(value: Any, key: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise RecordValidationError(f"{key} must be a list of strings")
    return tuple(value)


def _int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise RecordValidationError(f"{key} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of records with unique ids."""

    records: tuple[PublicationRecord, ...] = ()
    _by_id: dict[str, PublicationRecord] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        by_id: dict[str, PublicationRecord] = {}
        for rec in self.records:
            if rec.id in by_id:
                raise DuplicateRecordError(rec.id)
            by_id[rec.id] = rec
        object.__setattr__(self, "_by_id", by_id)

    @classmethod
    def from_records(cls, records: Iterable[PublicationRecord]) -> Corpus:
        return cls(tuple(records))

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def get(self, record_id: str) -> PublicationRecord | None:
        return self._by_id.get(record_id)

    def __getitem__(self, record_id: str) -> PublicationRecord:
        return self._by_id[record_id]

    def __contains__(self, record_id: object) -> bool:
        return record_id in self._by_id

    def __iter__(self) -> Iterator[PublicationRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def iter_record_lines(
    path: str | Path, extra_keys: Iterable[str] = ()
) -> Iterator[tuple[int, PublicationRecord, dict[str, Any]]]:
    """
    Yield (line number, record, raw object) for each non-blank line.

    Raises:
        CorpusFormatError: If a line is not valid JSON or not a valid record
    """
    extra = tuple(extra_keys)
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(line_no, f"invalid JSON ({e.msg})") from e
            try:
                rec = PublicationRecord.from_dict(obj, extra)
            except RecordValidationError as e:
                raise CorpusFormatError(line_no, str(e)) from e
            yield line_no, rec, obj


def load_corpus(path: str | Path) -> Corpus:
    """
    Load a line-delimited record file.

    Args:
        path: Path to a UTF-8 file with one JSON record per line

    Returns:
        Corpus with records in file order

    Raises:
        CorpusFormatError: On a malformed line (carries the line number)
        DuplicateRecordError: When an id repeats (names the id)
    """
    records: list[PublicationRecord] = []
    seen: set[str] = set()
    for line_no, rec, _ in iter_record_lines(path):
        if rec.id in seen:
            raise DuplicateRecordError(rec.id, line_no)
        seen.add(rec.id)
        records.append(rec)
    log.info("[corpus] path=%s records=%d", path, len(records))
    return Corpus(tuple(records))


def write_corpus(records: Iterable[PublicationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


# ============================================================================
# TOKENIZATION
# ============================================================================


@dataclass(frozen=True, slots=True)
class TokenStream:
    field: Field
    tokens: tuple[tuple[str, int], ...] = ()

    @property
    def words(self) -> list[str]:
        return [t for t, _ in self.tokens]


def tokenize(text: str) -> list[str]:
    """
    Split text into lowercase tokens.

    Text is NFKC-folded and lowercased, then split on every character that
    is not a letter or digit (hyphens and underscores included). No
    stemming is applied.
    """
    if not text:
        return []
    folded = unicodedata.normalize("NFKC", text).lower()
    return _TOKEN_RE.findall(folded)


def normalize_text(text: str, field: Field = Field.ABSTRACT) -> TokenStream:
    """Tokenize text into a stream with positions 0, 1, 2, ..."""
    return TokenStream(field, tuple((tok, i) for i, tok in enumerate(tokenize(text))))


def keyword_stream(keywords: Iterable[str]) -> TokenStream:
    """
    Build the KEYWORDS stream.

    Each entry's tokens take consecutive positions; the next entry starts
    KEYWORD_GAP positions after the previous entry's last token, so phrases
    never span two keywords.
    """
    out: list[tuple[str, int]] = []
    pos = 0
    for entry in keywords:
        toks = tokenize(entry)
        if not toks:
            continue
        for i, tok in enumerate(toks):
            out.append((tok, pos + i))
        pos += len(toks) - 1 + KEYWORD_GAP
    return TokenStream(Field.KEYWORDS, tuple(out))


def record_streams(record: PublicationRecord) -> dict[Field, TokenStream]:
    return {
        Field.TITLE: normalize_text(record.title, Field.TITLE),
        Field.ABSTRACT: normalize_text(record.abstract, Field.ABSTRACT),
        Field.KEYWORDS: keyword_stream(record.author_keywords),
    }


def normalize_journal(name: str) -> str:
    """Lowercase a journal name and collapse its whitespace."""
    return " ".join(name.lower().split())


# ============================================================================
# INVERTED INDEX
# ============================================================================


class Posting(NamedTuple):
    record_id: str
    field: Field
    position: int


@dataclass
class InvertedIndex:
    """
    Positional inverted index over a corpus.

    Attributes:
        postings: token -> postings in corpus order
        doc_count: Number of indexed records
        record_ids: All record ids in corpus order
        subject_postings: ASJC code -> ids of records carrying it
        journal_postings: normalised journal name -> record ids
        terms: Sorted vocabulary, for prefix expansion
    """

    postings: dict[str, list[Posting]]
    doc_count: int
    record_ids: tuple[str, ...]
    subject_postings: dict[int, frozenset[str]]
    journal_postings: dict[str, frozenset[str]]
    terms: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.terms:
            self.terms = sorted(self.postings)

    def expand_prefix(self, prefix: str) -> list[str]:
        """Every indexed token starting with `prefix`, sorted."""
        lo = bisect.bisect_left(self.terms, prefix)
        out = []
        for term in self.terms[lo:]:
            if not term.startswith(prefix):
                break
            out.append(term)
        return out

    def canonical(self) -> str:
        """Canonical JSON serialisation (two equal indexes give equal text)."""
        return json.dumps(
            {
                "doc_count": self.doc_count,
                "record_ids": list(self.record_ids),
                "postings": {
                    t: [[p.record_id, p.field.value, p.position] for p in ps]
                    for t, ps in sorted(self.postings.items())
                },
                "subjects": {
                    str(c): sorted(ids) for c, ids in sorted(self.subject_postings.items())
                },
                "journals": {
                    j: sorted(ids) for j, ids in sorted(self.journal_postings.items())
                },
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )


def build_index(corpus: Corpus) -> InvertedIndex:
    """
    Build the positional inverted index of a corpus.

    Postings cover the TITLE, ABSTRACT and KEYWORDS streams of every record;
    subject-area and journal postings are filled alongside.
    """
    postings: dict[str, list[Posting]] = defaultdict(list)
    subjects: dict[int, set[str]] = defaultdict(set)
    journals: dict[str, set[str]] = defaultdict(set)

    for rec in corpus:
        for stream in record_streams(rec).values():
            for tok, pos in stream.tokens:
                postings[tok].append(Posting(rec.id, stream.field, pos))
        for code in rec.asjc_codes:
            subjects[code].add(rec.id)
        journal = normalize_journal(rec.journal_name)
        if journal:
            journals[journal].add(rec.id)

    index = InvertedIndex(
        postings=dict(postings),
        doc_count=len(corpus),
        record_ids=tuple(corpus.ids),
        subject_postings={c: frozenset(ids) for c, ids in subjects.items()},
        journal_postings={j: frozenset(ids) for j, ids in journals.items()},
    )
    log.info("[index] records=%d terms=%d", index.doc_count, len(index.terms))
    return index
