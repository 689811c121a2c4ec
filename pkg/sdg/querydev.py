"""
Analyst tooling for developing and auditing query banks.

- Term and phrase suggestions mined from the records a query already matches
- One-hop citation neighbourhoods of a result set (recall auditing)
- Seeded review samples and the worksheet analysts fill in
- Journal concentration, for spotting specialised journals
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .classifier import TfidfConfig, fit_tfidf
from .common import ConfigurationError, DataError, EmptyInputError, SdgMapping, check_sdg
from .corpus import Corpus, normalize_journal, tokenize
from .query_dsl import QueryAst, TermPattern, query_terms

log = logging.getLogger(__name__)

WORKSHEET_COLUMNS = ("id", "title", "abstract", "verdict_analyst_1", "verdict_analyst_2")
SUGGESTION_FIELDS = ("title", "abstract", "keywords")


# ============================================================================
# TERM SUGGESTION
# ============================================================================


@dataclass(frozen=True, slots=True)
class TermSuggestion:
    term: str
    score: float
    covered: bool = False


def _covers(patterns: Iterable[TermPattern], term: str) -> bool:
    for pat in patterns:
        last = len(pat.tokens) - 1
        for i, tok in enumerate(pat.tokens):
            if tok == term or (pat.prefix and i == last and term.startswith(tok)):
                return True
    return False


def suggest_terms(
    positive_ids: Iterable[str],
    corpus: Corpus,
    k: int = 50,
    query: QueryAst | None = None,
) -> list[TermSuggestion]:
    """
    Rank candidate query terms by their mean TF-IDF weight over a matched set.

    The vocabulary is fitted on titles, abstracts and author keywords of the
    whole corpus with the classifier's idf convention and tokenizer, so a
    suggested term matches identically when pasted into a query.

    Args:
        positive_ids: Records the current query matches
        corpus: Corpus the ids refer to
        k: Maximum number of suggestions
        query: Existing query; terms it already contains are flagged `covered`

    Returns:
        Suggestions sorted by score descending, ties broken lexicographically

    Raises:
        EmptyInputError: If the positive set is empty
        ConfigurationError: If k < 1 or an id is not in the corpus
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    positives = sorted(set(positive_ids))
    if not positives:
        raise EmptyInputError("cannot suggest terms from an empty positive set")
    unknown = [rid for rid in positives if rid not in corpus]
    if unknown:
        raise ConfigurationError(f"{len(unknown)} positive ids not in corpus (first: {unknown[0]!r})")

    tfidf = fit_tfidf(corpus, TfidfConfig(min_df=1, fields=SUGGESTION_FIELDS))
    X = tfidf.transform(corpus[rid] for rid in positives)
    means = np.asarray(X.mean(axis=0)).ravel()
    terms = tfidf.terms
    order = sorted(range(len(terms)), key=lambda i: (-means[i], terms[i]))[:k]

    patterns = query_terms(query) if query is not None else set()
    return [
        TermSuggestion(terms[i], float(means[i]), _covers(patterns, terms[i]))
        for i in order
    ]


@dataclass(frozen=True, slots=True)
class PhraseSuggestion:
    phrase: str
    count: int
    covered: bool = False


def suggest_phrases(
    positive_ids: Iterable[str],
    corpus: Corpus,
    k: int = 50,
    query: QueryAst | None = None,
) -> list[PhraseSuggestion]:
    """
    Rank author-keyword entries of the positives as candidate phrases.

    Entries are compared in tokenized form and counted once per record.
    A phrase is `covered` when the query contains the same token sequence.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    positives = sorted(set(positive_ids))
    if not positives:
        raise EmptyInputError("cannot suggest phrases from an empty positive set")

    counts: Counter[str] = Counter()
    for rid in positives:
        rec = corpus.get(rid)
        if rec is None:
            raise ConfigurationError(f"positive id {rid!r} not in corpus")
        counts.update({" ".join(toks) for toks in map(tokenize, rec.author_keywords) if toks})

    patterns = query_terms(query) if query is not None else set()
    literal = {" ".join(p.tokens) for p in patterns if not p.prefix}
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [PhraseSuggestion(phrase, n, phrase in literal) for phrase, n in ranked]


# ============================================================================
# CITATION EXPANSION
# ============================================================================


def citation_graph(corpus: Corpus) -> nx.DiGraph:
    """
    Citation graph of a corpus, edges citing -> cited.

    References to records outside the corpus are dropped.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(corpus.ids)
    for rec in corpus:
        graph.add_edges_from((rec.id, ref) for ref in rec.references if ref in corpus)
    log.debug(
        "[citations] nodes=%d edges=%d", graph.number_of_nodes(), graph.number_of_edges()
    )
    return graph


def citation_expand(result_ids: Iterable[str], corpus: Corpus | nx.DiGraph) -> set[str]:
    """
    Records one citation hop away from a result set but not in it.

    Returns:
        { r not in result : r cites a member, or a member cites r }
    """
    graph = corpus if isinstance(corpus, nx.DiGraph) else citation_graph(corpus)
    result = set(result_ids)
    out: set[str] = set()
    for rid in result:
        if rid not in graph:
            continue
        out.update(graph.predecessors(rid))
        out.update(graph.successors(rid))
    return out - result


# ============================================================================
# REVIEW SAMPLES
# ============================================================================


@dataclass(frozen=True, slots=True)
class WorksheetRow:
    id: str
    title: str = ""
    abstract: str = ""
    verdict_analyst_1: str = ""
    verdict_analyst_2: str = ""


def sample_for_review(
    mapping: SdgMapping,
    sdg: int,
    n: int = 100,
    seed: int = 0,
    corpus: Corpus | None = None,
) -> list[WorksheetRow]:
    """
    Draw a seeded uniform sample of the records mapped to one SDG.

    When fewer than n records are mapped the whole population is returned,
    shuffled, and a warning is logged.

    Raises:
        ConfigurationError: If n < 1
        DataError: If a sampled id is missing from `corpus`
    """
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")
    check_sdg(sdg)
    population = sorted(mapping.records_for(sdg))
    if len(population) < n:
        log.warning(
            "[sample] sdg=%d population=%d below requested n=%d; returning all",
            sdg,
            len(population),
            n,
        )
    size = min(n, len(population))
    rng = np.random.default_rng(seed)
    picked = [population[i] for i in rng.choice(len(population), size=size, replace=False)]

    rows = []
    for rid in picked:
        if corpus is None:
            rows.append(WorksheetRow(rid))
            continue
        rec = corpus.get(rid)
        if rec is None:
            raise DataError(f"sampled record {rid!r} is not in the corpus")
        rows.append(WorksheetRow(rid, rec.title, rec.abstract))
    return rows


def write_worksheet(rows: Sequence[WorksheetRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(WORKSHEET_COLUMNS)
        for r in rows:
            writer.writerow([r.id, r.title, r.abstract, r.verdict_analyst_1, r.verdict_analyst_2])


# ============================================================================
# JOURNAL CONCENTRATION
# ============================================================================


@dataclass(frozen=True, slots=True)
class JournalShare:
    journal: str
    matched: int
    total: int

    @property
    def share(self) -> float:
        return self.matched / self.total


def journal_concentration(
    mapping: SdgMapping, sdg: int, corpus: Corpus
) -> list[JournalShare]:
    """
    Per-journal share of records mapped to an SDG.

    Journals are grouped by normalised name (first spelling seen is shown).
    Journals without matches are left out.

    Returns:
        Rows sorted by share descending, then matched count descending,
        then journal name
    """
    check_sdg(sdg)
    matched_ids = mapping.records_for(sdg)
    names: dict[str, str] = {}
    totals: Counter[str] = Counter()
    matched: Counter[str] = Counter()
    for rec in corpus:
        key = normalize_journal(rec.journal_name)
        if not key:
            continue
        names.setdefault(key, rec.journal_name.strip())
        totals[key] += 1
        if rec.id in matched_ids:
            matched[key] += 1

    rows = [JournalShare(names[j], matched[j], totals[j]) for j in matched]
    rows.sort(key=lambda r: (-r.share, -r.matched, r.journal))
    return rows


def render_journal_report(rows: Sequence[JournalShare]) -> str:
    lines = ["journal | matched | total | share"]
    lines += [f"{r.journal} | {r.matched} | {r.total} | {r.share:.4f}" for r in rows]
    return "\n".join(lines)
