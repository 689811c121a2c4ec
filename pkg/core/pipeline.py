"""
Subcommand workflows.

Every subcommand reads its inputs from files, writes its declared outputs,
prints results to stdout and returns an exit status. `COMMANDS` maps
subcommand names to their handlers.
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Callable

from sdg.classifier import (
    LogRegModel,
    build_training_set,
    fit_tfidf,
    score_corpus,
    top_features,
)
from sdg.combiner import (
    combine,
    provenance_records,
    provenance_report,
    render_provenance,
    write_plot_data,
)
from sdg.common import (
    SDG_IDS,
    SdgMapping,
    TrainingError,
    UsageError,
    read_mapping,
    read_scores,
    write_mapping,
    write_scores,
)
from sdg.corpus import build_index, load_corpus, write_corpus
from sdg.evaluation import (
    benchmark,
    benchmark_records,
    build_recall_set,
    compare_mappings,
    estimate_precision,
    estimate_recall,
    gate,
    load_validation_dataset,
    read_worksheet,
    render_benchmark,
    render_comparison,
    render_per_class,
    write_comparison_csv,
)
from sdg.query_dsl import load_query_bank, parse, render, render_bank
from sdg.querydev import (
    citation_expand,
    journal_concentration,
    render_journal_report,
    sample_for_review,
    suggest_phrases,
    suggest_terms,
    write_worksheet,
)
from sdg.synthetic import generate_corpus, generate_validation, write_validation

from .args import RunConfig, gate_config, hyperparams, tfidf_config
from .parallel import ParallelExecutor
from .utils import check_distinct_paths, emit, json_lines, load_id_list

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REJECT = 3

Handler = Callable[[RunConfig, argparse.Namespace], int]


def _executor(config: RunConfig) -> ParallelExecutor:
    return ParallelExecutor(workers=config.threads, progress_every=config.progress_every)


def _named(spec: str, option: str, name_required: bool) -> tuple[str, str]:
    if "=" in spec:
        name, path = spec.split("=", 1)
        if name and path:
            return name, path
    elif not name_required:
        return Path(spec).stem, spec
    raise UsageError(f"{option} expects NAME=PATH, got {spec!r}")


def _input_ids(args: argparse.Namespace) -> set[str]:
    if args.sdg is not None:
        return read_mapping(args.ids).records_for(args.sdg)
    return set(load_id_list(args.ids))


# ============================================================================
# CORPUS AND QUERIES
# ============================================================================


def cmd_ingest(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.corpus], [args.index_out])
    corpus = load_corpus(args.corpus)
    index = build_index(corpus)
    summary = {
        "records": len(corpus),
        "courses": sum(1 for r in corpus if r.year is None),
        "with_fulltext": sum(1 for r in corpus if r.fulltext_terms is not None),
        "with_references": sum(1 for r in corpus if r.references),
        "journals": len(index.journal_postings),
        "terms": len(index.terms),
    }
    if args.index_out:
        emit(index.canonical(), args.index_out)
    if config.machine:
        emit(json.dumps(summary, sort_keys=True))
    else:
        emit("\n".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


def cmd_parse(config: RunConfig, args: argparse.Namespace) -> int:
    bank = load_query_bank(args.queries)
    if config.machine:
        emit(json_lines({"sdg": e.sdg, "theme": e.theme, "query": render(e.query)} for e in bank))
    else:
        emit(render_bank(bank))
    log.info("[parse] queries=%d sdgs=%s", len(bank), ",".join(map(str, bank.sdgs())))
    return EXIT_OK


def cmd_map(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.corpus, args.queries], [args.out])
    corpus = load_corpus(args.corpus)
    bank = load_query_bank(args.queries)
    target = corpus if args.naive else build_index(corpus)
    mapping = _executor(config).run_query_bank(bank, target)
    write_mapping(mapping, args.out)
    _print_counts(config, mapping)
    return EXIT_OK


def _print_counts(config: RunConfig, mapping: SdgMapping) -> None:
    rows = [
        {"sdg": s, "records": len(mapping.records_for(s))}
        for s in SDG_IDS
        if mapping.records_for(s)
    ]
    if config.machine:
        emit(json_lines(rows))
    else:
        emit("\n".join(f"SDG {r['sdg']:>2}  {r['records']}" for r in rows) or "no assignments")


# ============================================================================
# MODEL
# ============================================================================


def cmd_train(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.corpus, args.mapping], [args.model_out])
    hp = hyperparams(args, config.seed)
    tconf = tfidf_config(args)
    corpus = load_corpus(args.corpus)
    mapping = read_mapping(args.mapping)

    training_sets = build_training_set(
        mapping, corpus, ratio=hp.negative_ratio, seed=hp.seed, sdgs=args.sdgs or SDG_IDS
    )
    if not training_sets.sets:
        raise TrainingError("no SDG has query-assigned records to learn from")
    tfidf = fit_tfidf(corpus, tconf)
    model = _executor(config).train_models(tfidf, corpus, training_sets, hp)
    model.save(args.model_out)
    log.info(
        "[train] model=%s sdgs=%d skipped=%d",
        args.model_out,
        len(model.sdgs),
        len(model.skipped),
    )
    return EXIT_OK


def cmd_score(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.corpus, args.model], [args.out])
    corpus = load_corpus(args.corpus)
    model = LogRegModel.load(args.model)
    scores = score_corpus(corpus, model)
    write_scores(scores, args.out)
    log.info("[score] records=%d sdgs=%d", len(scores), len(model.sdgs))
    return EXIT_OK


def cmd_key_phrases(config: RunConfig, args: argparse.Namespace) -> int:
    model = LogRegModel.load(args.model)
    sdgs = [args.sdg] if args.sdg is not None else model.sdgs
    rows = [
        {"sdg": s, "term": term, "weight": weight}
        for s in sdgs
        for term, weight in top_features(model, s, args.top)
    ]
    if config.machine:
        emit(json_lines(rows))
    else:
        lines = []
        for s in sdgs:
            terms = [f"{r['term']} ({r['weight']:.3f})" for r in rows if r["sdg"] == s]
            lines.append(f"SDG {s}: " + ", ".join(terms))
        emit("\n".join(lines))
    return EXIT_OK


# ============================================================================
# COMBINATION
# ============================================================================


def cmd_combine(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.mapping, args.scores], [args.out])
    query_mapping = read_mapping(args.mapping)
    scores = read_scores(args.scores)
    combined = combine(query_mapping, scores, args.theta)
    write_mapping(combined, args.out)
    _print_provenance(config, combined, args.include_sdg17)
    return EXIT_OK


def cmd_report_provenance(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.mapping], [args.plot_data])
    mapping = read_mapping(args.mapping)
    report = _print_provenance(config, mapping, args.include_sdg17)
    if args.plot_data:
        write_plot_data(report, args.plot_data)
    return EXIT_OK


def _print_provenance(config: RunConfig, mapping: SdgMapping, include_sdg17: bool):
    report = provenance_report(mapping, include_sdg17=include_sdg17)
    if config.machine:
        emit(json_lines(provenance_records(report)))
    else:
        emit(render_provenance(report))
    return report


# ============================================================================
# EVALUATION
# ============================================================================


def cmd_evaluate(config: RunConfig, args: argparse.Namespace) -> int:
    methods = {}
    for spec in args.method:
        name, path = _named(spec, "--method", name_required=True)
        methods[name] = read_mapping(path)
    datasets = []
    for spec in args.dataset:
        name, path = _named(spec, "--dataset", name_required=False)
        datasets.append(load_validation_dataset(path, name))

    result = benchmark(methods, datasets)
    for cell in result.cells.values():
        if cell.missing:
            log.warning(
                "[evaluate] method=%s dataset=%s missing_ids=%d (counted as empty predictions)",
                cell.method,
                cell.dataset,
                cell.missing,
            )
    if config.machine:
        emit(json_lines(benchmark_records(result)))
    else:
        text = render_benchmark(result)
        if args.per_class:
            text += "\n" + "\n\n".join(render_per_class(result, d) for d in result.datasets)
        if result.missing_total:
            text += f"\nmissing ids counted as empty predictions: {result.missing_total}"
        emit(text)
    return EXIT_OK


def cmd_gate(config: RunConfig, args: argparse.Namespace) -> int:
    decision = gate(args.precision, args.recall, args.sample, gate_config(args))
    if config.machine:
        emit(json.dumps({"accepted": decision.accepted, "reasons": list(decision.reasons)}))
    else:
        emit(decision.describe())
    return EXIT_OK if decision.accepted else EXIT_REJECT


def cmd_sample(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.mapping, args.corpus], [args.out])
    mapping = read_mapping(args.mapping)
    corpus = load_corpus(args.corpus)
    rows = sample_for_review(mapping, args.sdg, args.size, config.seed, corpus)
    write_worksheet(rows, args.out)
    log.info("[sample] sdg=%d rows=%d out=%s", args.sdg, len(rows), args.out)
    return EXIT_OK


def cmd_precision(config: RunConfig, args: argparse.Namespace) -> int:
    estimate = estimate_precision(read_worksheet(args.worksheet))
    if config.machine:
        emit(
            json.dumps(
                {
                    "precision": estimate.precision,
                    "agreement_rate": estimate.agreement_rate,
                    "sample_size": estimate.sample_size,
                }
            )
        )
    else:
        emit(
            f"precision={estimate.precision:.4f} agreement={estimate.agreement_rate:.4f} "
            f"n={estimate.sample_size}"
        )
    return EXIT_OK


def cmd_recall(config: RunConfig, args: argparse.Namespace) -> int:
    mapping = read_mapping(args.mapping)
    if args.recall_set:
        recall_set = load_validation_dataset(args.recall_set)
    else:
        if not args.corpus:
            raise UsageError("--journal needs --corpus to draw the recall set from")
        recall_set = build_recall_set(load_corpus(args.corpus), args.journal, args.sdg)
    value = estimate_recall(mapping, recall_set, args.sdg)
    if config.machine:
        emit(json.dumps({"sdg": args.sdg, "recall": value, "recall_set_size": len(recall_set)}))
    else:
        emit(f"recall={value:.4f} n={len(recall_set)}")
    return EXIT_OK


# ============================================================================
# QUERY DEVELOPMENT
# ============================================================================


def cmd_suggest_terms(config: RunConfig, args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    ids = _input_ids(args)
    query = parse(args.query) if args.query else None
    terms = suggest_terms(ids, corpus, args.top, query)
    phrases = suggest_phrases(ids, corpus, args.top, query)
    if config.machine:
        rows = [{"kind": "term", "term": t.term, "score": t.score, "covered": t.covered} for t in terms]
        rows += [
            {"kind": "phrase", "term": p.phrase, "count": p.count, "covered": p.covered}
            for p in phrases
        ]
        emit(json_lines(rows))
    else:
        lines = ["term | score | covered"]
        lines += [f"{t.term} | {t.score:.4f} | {'yes' if t.covered else ''}" for t in terms]
        lines += ["", "phrase | records | covered"]
        lines += [f"{p.phrase} | {p.count} | {'yes' if p.covered else ''}" for p in phrases]
        emit("\n".join(lines))
    return EXIT_OK


def cmd_expand_citations(config: RunConfig, args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    ids = _input_ids(args)
    found = sorted(citation_expand(ids, corpus))
    log.info("[citations] seeds=%d neighbours=%d", len(ids), len(found))
    if config.machine:
        emit(json_lines({"id": rid} for rid in found))
    else:
        emit("\n".join(found))
    return EXIT_OK


def cmd_journal_report(config: RunConfig, args: argparse.Namespace) -> int:
    mapping = read_mapping(args.mapping)
    corpus = load_corpus(args.corpus)
    rows = journal_concentration(mapping, args.sdg, corpus)
    if args.top:
        rows = rows[: args.top]
    if config.machine:
        emit(
            json_lines(
                {"journal": r.journal, "matched": r.matched, "total": r.total, "share": r.share}
                for r in rows
            )
        )
    else:
        emit(render_journal_report(rows))
    return EXIT_OK


def cmd_compare(config: RunConfig, args: argparse.Namespace) -> int:
    check_distinct_paths([args.a, args.b], [args.csv])
    rows = compare_mappings(read_mapping(args.a), read_mapping(args.b), args.sdgs)
    if args.csv:
        write_comparison_csv(rows, args.csv, args.label_a, args.label_b)
    if config.machine:
        emit(
            json_lines(
                {"sdg": r.sdg, "a": r.count_a, "b": r.count_b, "intersection": r.intersection}
                for r in rows
            )
        )
    else:
        emit(render_comparison(rows, args.label_a, args.label_b))
    return EXIT_OK


def cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    synthetic = generate_corpus(args.records, config.seed)
    write_corpus(synthetic.corpus, args.out)
    if args.validation_out:
        dataset = generate_validation(synthetic, size=args.validation_size, seed=config.seed)
        write_validation(dataset, args.validation_out)
        log.info("[synth] validation=%s items=%d", args.validation_out, len(dataset))
    return EXIT_OK


COMMANDS: dict[str, Handler] = {
    "ingest": cmd_ingest,
    "parse": cmd_parse,
    "map": cmd_map,
    "train": cmd_train,
    "score": cmd_score,
    "combine": cmd_combine,
    "report-provenance": cmd_report_provenance,
    "evaluate": cmd_evaluate,
    "gate": cmd_gate,
    "sample": cmd_sample,
    "precision": cmd_precision,
    "recall": cmd_recall,
    "suggest-terms": cmd_suggest_terms,
    "expand-citations": cmd_expand_citations,
    "journal-report": cmd_journal_report,
    "compare": cmd_compare,
    "synth": cmd_synth,
    "key-phrases": cmd_key_phrases,
}
