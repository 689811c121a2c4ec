"""
Query evaluation.

Two evaluators share one semantics:

- `matches(ast, record)` scans a single record's token streams directly.
  It is the reference behaviour.
- `execute(ast, index)` evaluates against the positional inverted index
  and must return exactly the ids `matches` accepts.

`run_query_bank` runs every theme query of a bank and rolls theme hits up
to SDG-level assignments with QUERY provenance.
"""

from __future__ import annotations

import bisect
import logging
from typing import Iterable, Mapping, Sequence

from .asjc import code_matches
from .common import SdgMapping
from .corpus import (
    Corpus,
    Field,
    InvertedIndex,
    PublicationRecord,
    normalize_journal,
    record_streams,
    tokenize,
)
from .query_dsl import (
    And,
    AndNot,
    FieldScope,
    Or,
    Proximity,
    QueryAst,
    QueryBank,
    SourceFilter,
    SubjectFilter,
    SubjectMode,
    TermPattern,
)

log = logging.getLogger(__name__)


def _token_matches(token: str, pat: str, prefix: bool) -> bool:
    return token.startswith(pat) if prefix else token == pat


def _within(pa: int, pb: int, distance: int, ordered: bool) -> bool:
    if ordered:
        return pa < pb and pb - pa <= distance
    return abs(pa - pb) <= distance


# ============================================================================
# NAIVE MATCHER
# ============================================================================


def _pattern_starts(tokens: Sequence[tuple[str, int]], pattern: TermPattern) -> list[int]:
    """Start positions where the pattern matches consecutively in one stream."""
    by_pos = {pos: tok for tok, pos in tokens}
    last = len(pattern.tokens) - 1
    starts = []
    for _, start in tokens:
        for i, pat in enumerate(pattern.tokens):
            tok = by_pos.get(start + i)
            if tok is None or not _token_matches(tok, pat, pattern.prefix and i == last):
                break
        else:
            starts.append(start)
    return starts


def _journal_matches(journal: str, pattern: TermPattern) -> bool:
    toks = tokenize(journal)
    return bool(_pattern_starts([(t, i) for i, t in enumerate(toks)], pattern))


def _match_scoped(node: QueryAst, streams: Mapping[Field, Sequence[tuple[str, int]]]) -> bool:
    if isinstance(node, TermPattern):
        return any(_pattern_starts(toks, node) for toks in streams.values())
    if isinstance(node, Proximity):
        for toks in streams.values():
            for pa in _pattern_starts(toks, node.left):
                for pb in _pattern_starts(toks, node.right):
                    if _within(pa, pb, node.distance, node.ordered):
                        return True
        return False
    if isinstance(node, And):
        return all(_match_scoped(c, streams) for c in node.children)
    if isinstance(node, Or):
        return any(_match_scoped(c, streams) for c in node.children)
    raise TypeError(f"{type(node).__name__} cannot appear inside a field scope")


def _match(node: QueryAst, record: PublicationRecord, streams) -> bool:
    if isinstance(node, FieldScope):
        scoped = {f: streams[f].tokens for f in node.fields}
        return _match_scoped(node.child, scoped)
    if isinstance(node, And):
        return all(_match(c, record, streams) for c in node.children)
    if isinstance(node, Or):
        return any(_match(c, record, streams) for c in node.children)
    if isinstance(node, AndNot):
        return _match(node.left, record, streams) and not _match(
            node.right, record, streams
        )
    if isinstance(node, SubjectFilter):
        hit = any(code_matches(rc, fc) for rc in record.asjc_codes for fc in node.codes)
        return hit if node.mode is SubjectMode.INCLUDE else not hit
    if isinstance(node, SourceFilter):
        return _journal_matches(normalize_journal(record.journal_name), node.pattern)
    raise TypeError(f"{type(node).__name__} must be enclosed in a field scope")


def matches(ast: QueryAst, record: PublicationRecord) -> bool:
    """
    Decide whether one record satisfies a query.

    A pattern matches when all its tokens occur at consecutive positions
    within one field of its scope (the last token by prefix when the
    pattern ends in `*`). W/n needs occurrences of both sides whose start
    positions differ by at most n in the same field; PRE/n additionally
    needs the left occurrence first.
    """
    return _match(ast, record, record_streams(record))


def naive_scan(ast: QueryAst, corpus: Iterable[PublicationRecord]) -> set[str]:
    return {r.id for r in corpus if matches(ast, r)}


# ============================================================================
# INDEXED EXECUTION
# ============================================================================

Occurrences = dict[tuple[str, Field], list[int]]


def _occurrences(pattern: TermPattern, fields: frozenset[Field], index: InvertedIndex) -> Occurrences:
    """(record, field) -> sorted start positions of the pattern."""
    last = len(pattern.tokens) - 1
    position_sets: list[set[tuple[str, Field, int]]] = []
    for i, pat in enumerate(pattern.tokens):
        terms = index.expand_prefix(pat) if pattern.prefix and i == last else [pat]
        hits = {
            (p.record_id, p.field, p.position - i)
            for term in terms
            for p in index.postings.get(term, ())
            if p.field in fields
        }
        if not hits:
            return {}
        position_sets.append(hits)

    starts = set.intersection(*position_sets)
    out: Occurrences = {}
    for rid, fld, pos in starts:
        out.setdefault((rid, fld), []).append(pos)
    for positions in out.values():
        positions.sort()
    return out


def _proximity_hits(node: Proximity, fields: frozenset[Field], index: InvertedIndex) -> set[str]:
    left = _occurrences(node.left, fields, index)
    right = _occurrences(node.right, fields, index)
    out: set[str] = set()
    for key, a_positions in left.items():
        b_positions = right.get(key)
        if not b_positions or key[0] in out:
            continue
        for pa in a_positions:
            lo = pa + 1 if node.ordered else pa - node.distance
            i = bisect.bisect_left(b_positions, lo)
            hit = False
            while i < len(b_positions) and b_positions[i] <= pa + node.distance:
                if _within(pa, b_positions[i], node.distance, node.ordered):
                    hit = True
                    break
                i += 1
            if hit:
                out.add(key[0])
                break
    return out


def _execute_scoped(node: QueryAst, fields: frozenset[Field], index: InvertedIndex) -> set[str]:
    if isinstance(node, TermPattern):
        return {rid for rid, _ in _occurrences(node, fields, index)}
    if isinstance(node, Proximity):
        return _proximity_hits(node, fields, index)
    if isinstance(node, And):
        result = _execute_scoped(node.children[0], fields, index)
        for c in node.children[1:]:
            if not result:
                break
            result &= _execute_scoped(c, fields, index)
        return result
    if isinstance(node, Or):
        result = set()
        for c in node.children:
            result |= _execute_scoped(c, fields, index)
        return result
    raise TypeError(f"{type(node).__name__} cannot appear inside a field scope")


def _subject_hits(node: SubjectFilter, index: InvertedIndex) -> set[str]:
    hit: set[str] = set()
    for code, ids in index.subject_postings.items():
        if any(code_matches(code, fc) for fc in node.codes):
            hit |= ids
    if node.mode is SubjectMode.EXCLUDE:
        return set(index.record_ids) - hit
    return hit


def _source_hits(node: SourceFilter, index: InvertedIndex) -> set[str]:
    out: set[str] = set()
    for journal, ids in index.journal_postings.items():
        if _journal_matches(journal, node.pattern):
            out |= ids
    return out


def execute(ast: QueryAst, index: InvertedIndex) -> set[str]:
    """
    Evaluate a query against an inverted index.

    Returns:
        Ids of all records the query matches (identical to scanning every
        record with `matches`)
    """
    if isinstance(ast, FieldScope):
        return _execute_scoped(ast.child, frozenset(ast.fields), index)
    if isinstance(ast, And):
        result = execute(ast.children[0], index)
        for c in ast.children[1:]:
            if not result:
                break
            result &= execute(c, index)
        return result
    if isinstance(ast, Or):
        result = set()
        for c in ast.children:
            result |= execute(c, index)
        return result
    if isinstance(ast, AndNot):
        left = execute(ast.left, index)
        return left - execute(ast.right, index) if left else left
    if isinstance(ast, SubjectFilter):
        return _subject_hits(ast, index)
    if isinstance(ast, SourceFilter):
        return _source_hits(ast, index)
    raise TypeError(f"{type(ast).__name__} must be enclosed in a field scope")


# ============================================================================
# QUERY BANKS
# ============================================================================


def evaluate_entry(ast: QueryAst, target: InvertedIndex | Corpus) -> set[str]:
    if isinstance(target, InvertedIndex):
        return execute(ast, target)
    return naive_scan(ast, target)


def mapping_from_hits(bank: QueryBank, hits: Sequence[Iterable[str]]) -> SdgMapping:
    """
    Roll per-entry hit sets up into an SdgMapping.

    Args:
        bank: The bank the hits were computed for
        hits: One id collection per bank entry, in bank order

    Returns:
        Mapping where a record gets SDG s (QUERY) iff some theme of s hit it
    """
    mapping = SdgMapping()
    for entry, ids in zip(bank.entries, hits):
        for rid in sorted(ids):
            mapping.add_theme_hit(rid, entry.sdg, entry.theme)
    return mapping


def run_query_bank(bank: QueryBank, target: InvertedIndex | Corpus) -> SdgMapping:
    """
    Run every theme query of a bank.

    Args:
        bank: Parsed query bank
        target: An InvertedIndex, or a Corpus for the naive per-record scan

    Returns:
        SdgMapping with QUERY assignments and the themes that fired
    """
    hits = [evaluate_entry(e.query, target) for e in bank]
    mapping = mapping_from_hits(bank, hits)
    log.info(
        "[map] queries=%d records=%d assignments=%d",
        len(bank),
        len(mapping),
        len(mapping.pairs()),
    )
    return mapping
