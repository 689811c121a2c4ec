"""
Shared types for the SDG mapper.

This module holds the pieces every other module agrees on: the SDG class
range, assignment provenance, the SdgMapping container with its file
format, and the exception hierarchy used across the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

SDG_IDS = tuple(range(1, 18))


# ============================================================================
# ERRORS
# ============================================================================


class SdgMapperError(Exception):
    """Base class for every error raised by the mapper."""


class ConfigurationError(SdgMapperError, ValueError):
    """A parameter is outside its allowed range."""


class UsageError(SdgMapperError):
    """The command line was used incorrectly."""


class DataError(SdgMapperError):
    """Input data could not be read or violates its schema."""


class TrainingError(SdgMapperError):
    """Model training could not proceed."""


class EmptyInputError(DataError):
    """An operation received an empty input it cannot work with."""


class CorpusFormatError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateRecordError(DataError):
    def __init__(self, record_id: str, line_no: int | None = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}duplicate record id {record_id!r}")
        self.record_id = record_id
        self.line_no = line_no


class RecordValidationError(DataError):
    """A record violates a PublicationRecord invariant."""


class QuerySyntaxError(DataError):
    """
    A query failed to parse.

    Attributes:
        offset: Byte offset (UTF-8) of the failure in the query source
        expected: Names of the tokens that would have been accepted
    """

    def __init__(
        self, message: str, offset: int = 0, expected: Iterable[str] = ()
    ):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"offset {offset}: {message}{detail}")
        self.reason = message


class WildcardPositionError(QuerySyntaxError):
    """`*` used anywhere but the end of the final token of a pattern."""


class ProximityOperandError(QuerySyntaxError):
    """W/n or PRE/n applied to something other than two term patterns."""


class UnsupportedFieldError(QuerySyntaxError):
    """A field function outside the supported set."""


class QueryBankError(DataError):
    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class MappingFormatError(DataError):
    """A mapping or score file is malformed."""


class ModelFormatError(DataError):
    """A model artifact is malformed or has an unknown format version."""


class AnnotationError(DataError):
    """A review worksheet has missing or invalid verdicts."""


def check_sdg(sdg: int) -> int:
    """Validate an SDG class id and return it."""
    if isinstance(sdg, bool) or not isinstance(sdg, int) or not 1 <= sdg <= 17:
        raise ConfigurationError(f"SDG id must be an integer in [1, 17], got {sdg!r}")
    return sdg


# ============================================================================
# MAPPING
# ============================================================================


class Provenance(str, Enum):
    QUERY = "QUERY"
    ML = "ML"


@dataclass
class SdgMapping:
    """
    Document-to-SDG assignments with provenance.

    A (record, SDG) pair is present at most once. QUERY provenance always
    wins over ML: assigning QUERY replaces an ML entry, assigning ML never
    replaces a QUERY entry.

    Attributes:
        assignments: record id -> {sdg: provenance}
        theme_hits: record id -> {sdg: theme labels that matched}
        scores: record id -> {sdg: model probability} for scored pairs
    """

    assignments: dict[str, dict[int, Provenance]] = field(default_factory=dict)
    theme_hits: dict[str, dict[int, set[str]]] = field(default_factory=dict)
    scores: dict[str, dict[int, float]] = field(default_factory=dict)

    def assign(self, record_id: str, sdg: int, provenance: Provenance) -> None:
        current = self.assignments.setdefault(record_id, {})
        if current.get(sdg) is Provenance.QUERY:
            return
        current[sdg] = provenance

    def add_theme_hit(self, record_id: str, sdg: int, theme: str) -> None:
        self.assign(record_id, sdg, Provenance.QUERY)
        self.theme_hits.setdefault(record_id, {}).setdefault(sdg, set()).add(theme)

    def set_score(self, record_id: str, sdg: int, score: float) -> None:
        self.scores.setdefault(record_id, {})[sdg] = score

    def sdgs(self, record_id: str) -> set[int]:
        return set(self.assignments.get(record_id, ()))

    def provenance(self, record_id: str, sdg: int) -> Provenance | None:
        return self.assignments.get(record_id, {}).get(sdg)

    def records_for(self, sdg: int, provenance: Provenance | None = None) -> set[str]:
        return {
            rid
            for rid, sdgs in self.assignments.items()
            if sdg in sdgs and (provenance is None or sdgs[sdg] is provenance)
        }

    def pairs(self, provenance: Provenance | None = None) -> set[tuple[str, int]]:
        return {
            (rid, sdg)
            for rid, sdgs in self.assignments.items()
            for sdg, prov in sdgs.items()
            if provenance is None or prov is provenance
        }

    def restrict(self, provenance: Provenance) -> SdgMapping:
        """Return the sub-mapping holding only assignments of one provenance."""
        out = SdgMapping()
        for rid, sdg in sorted(self.pairs(provenance)):
            out.assign(rid, sdg, provenance)
            for theme in self.theme_hits.get(rid, {}).get(sdg, ()):
                out.add_theme_hit(rid, sdg, theme)
        return out

    def record_ids(self) -> list[str]:
        return sorted(rid for rid, sdgs in self.assignments.items() if sdgs)

    def __len__(self) -> int:
        return len(self.record_ids())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SdgMapping):
            return NotImplemented
        return (
            _nonempty(self.assignments) == _nonempty(other.assignments)
            and _nonempty(self.theme_hits) == _nonempty(other.theme_hits)
        )


def _nonempty(d: Mapping[str, Mapping]) -> dict:
    return {k: dict(v) for k, v in d.items() if v}


# ============================================================================
# MAPPING FILES
# ============================================================================


def mapping_lines(mapping: SdgMapping) -> Iterator[str]:
    """
    Serialise a mapping, one JSON object per record.

    Ids are emitted in lexicographic order and SDGs in ascending order so
    identical mappings always produce identical bytes.
    """
    for rid in mapping.record_ids():
        entries = []
        for sdg in sorted(mapping.assignments[rid]):
            entry: dict[str, object] = {
                "sdg": sdg,
                "provenance": mapping.assignments[rid][sdg].value,
                "themes": sorted(mapping.theme_hits.get(rid, {}).get(sdg, ())),
            }
            score = mapping.scores.get(rid, {}).get(sdg)
            if score is not None:
                entry["score"] = score
            entries.append(entry)
        yield json.dumps({"id": rid, "sdgs": entries}, ensure_ascii=False)


def write_mapping(mapping: SdgMapping, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in mapping_lines(mapping):
            f.write(line + "\n")


def read_mapping(path: str | Path) -> SdgMapping:
    mapping = SdgMapping()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rid = str(obj["id"])
                for entry in obj["sdgs"]:
                    sdg = check_sdg(int(entry["sdg"]))
                    prov = Provenance(entry["provenance"])
                    mapping.assign(rid, sdg, prov)
                    if prov is Provenance.QUERY:
                        for theme in entry.get("themes", ()):
                            mapping.add_theme_hit(rid, sdg, theme)
                    if "score" in entry:
                        mapping.set_score(rid, sdg, float(entry["score"]))
            except (ValueError, KeyError, TypeError) as e:
                raise MappingFormatError(f"{path}:{line_no}: {e}") from e
    return mapping


def write_scores(scores: Mapping[str, Mapping[int, float]], path: str | Path) -> None:
    """Write per-record SDG probabilities, ids sorted, SDGs ascending."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rid in sorted(scores):
            row = {str(sdg): scores[rid][sdg] for sdg in sorted(scores[rid])}
            f.write(json.dumps({"id": rid, "scores": row}, ensure_ascii=False) + "\n")


def read_scores(path: str | Path) -> dict[str, dict[int, float]]:
    out: dict[str, dict[int, float]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["id"])] = {
                    check_sdg(int(k)): float(v) for k, v in obj["scores"].items()
                }
            except (ValueError, KeyError, TypeError, AttributeError) as e:
                raise MappingFormatError(f"{path}:{line_no}: {e}") from e
    return out
