"""
Measurement: confusion counts, F1 reports, acceptance gate, precision and
recall estimation, method-by-dataset benchmarking and mapping comparison.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .common import (
    AnnotationError,
    ConfigurationError,
    CorpusFormatError,
    EmptyInputError,
    SdgMapping,
    check_sdg,
)
from .corpus import Corpus, PublicationRecord, iter_record_lines, normalize_journal

log = logging.getLogger(__name__)


# ============================================================================
# VALIDATION DATASETS
# ============================================================================


@dataclass(frozen=True, slots=True)
class ValidationItem:
    record_id: str
    gold: frozenset[int]
    record: PublicationRecord | None = None

    def __post_init__(self) -> None:
        if not self.gold:
            raise ConfigurationError(f"item {self.record_id!r} has an empty gold set")
        for sdg in self.gold:
            check_sdg(sdg)


@dataclass(frozen=True)
class ValidationDataset:
    name: str
    items: tuple[ValidationItem, ...]
    multi_label: bool = False

    @property
    def supported_classes(self) -> list[int]:
        """SDGs with non-zero gold support."""
        return sorted({s for item in self.items for s in item.gold})

    def __len__(self) -> int:
        return len(self.items)


def load_validation_dataset(path: str | Path, name: str | None = None) -> ValidationDataset:
    """
    Load a validation set.

    Lines are either full corpus records with an extra `gold` list, or bare
    references `{"id": ..., "gold": [...]}` to records of another corpus.
    """
    items: list[ValidationItem] = []
    with open(path, "r", encoding="utf-8") as f:
        raw_lines = [(i, line) for i, line in enumerate(f, start=1) if line.strip()]
    if not raw_lines:
        raise EmptyInputError(f"{path}: validation dataset is empty")

    objs = []
    for line_no, line in raw_lines:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusFormatError(line_no, f"invalid JSON ({e.msg})") from e
        if not isinstance(obj, dict) or "id" not in obj:
            raise CorpusFormatError(line_no, "validation line needs an 'id'")
        objs.append((line_no, obj))

    if {"title", "description"} & set(objs[0][1]):
        for line_no, rec, obj in iter_record_lines(path, extra_keys=("gold",)):
            items.append(_item(rec.id, obj.get("gold"), line_no, rec))
    else:
        for line_no, obj in objs:
            items.append(_item(str(obj["id"]), obj.get("gold"), line_no))

    multi = any(len(i.gold) > 1 for i in items)
    return ValidationDataset(name or Path(path).stem, tuple(items), multi)


def _item(rid: str, gold, line_no: int, rec: PublicationRecord | None = None) -> ValidationItem:
    if not isinstance(gold, list) or not gold:
        raise CorpusFormatError(line_no, "gold must be a non-empty list of SDG ids")
    try:
        return ValidationItem(rid, frozenset(int(g) for g in gold), rec)
    except (ConfigurationError, ValueError, TypeError) as e:
        raise CorpusFormatError(line_no, str(e)) from e


def build_recall_set(
    corpus: Corpus, journals: Iterable[str], sdg: int, name: str | None = None
) -> ValidationDataset:
    """
    Recall set made of every record published in the given specialised journals.
    """
    check_sdg(sdg)
    wanted = {normalize_journal(j) for j in journals}
    items = tuple(
        ValidationItem(r.id, frozenset({sdg}))
        for r in corpus
        if normalize_journal(r.journal_name) in wanted
    )
    return ValidationDataset(name or f"recall_sdg{sdg}", items)


# ============================================================================
# CONFUSION AND F1
# ============================================================================


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True, slots=True)
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)


def confusion(
    pred: SdgMapping,
    gold: ValidationDataset,
    classes: Iterable[int] | None = None,
) -> dict[int, ClassCounts]:
    """
    Per-class multi-label confusion counts.

    Items absent from `pred` count as empty predictions.

    Args:
        pred: Predicted mapping
        gold: Validation dataset
        classes: SDGs to count (default: those with gold support)

    Raises:
        ConfigurationError: On a class id outside [1, 17]
    """
    classes = sorted(set(classes)) if classes is not None else gold.supported_classes
    for c in classes:
        check_sdg(c)
    tp = dict.fromkeys(classes, 0)
    fp = dict.fromkeys(classes, 0)
    fn = dict.fromkeys(classes, 0)
    for item in gold.items:
        predicted = pred.sdgs(item.record_id)
        for c in classes:
            p, g = c in predicted, c in item.gold
            if p and g:
                tp[c] += 1
            elif p:
                fp[c] += 1
            elif g:
                fn[c] += 1
    return {c: ClassCounts(tp[c], fp[c], fn[c]) for c in classes}


def percent(x: float) -> int:
    """Round a fraction to a whole percent, halves rounding up."""
    return int(math.floor(x * 100 + 0.5))


@dataclass(frozen=True)
class MetricsReport:
    """
    Per-class counts with micro and macro aggregates.

    Micro figures come from TP/FP/FN summed over the evaluated classes;
    macro figures are unweighted means of the per-class values.
    """

    per_class: dict[int, ClassCounts]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @property
    def classes_evaluated(self) -> frozenset[int]:
        return frozenset(self.per_class)

    def cell(self) -> str:
        """Rendered as `micro/macro` F1 in whole percents, e.g. `76/48`."""
        return format_cell(self.micro_f1, self.macro_f1)

    def to_dict(self) -> dict:
        return {
            "per_class": {
                str(c): {
                    "tp": k.tp,
                    "fp": k.fp,
                    "fn": k.fn,
                    "precision": k.precision,
                    "recall": k.recall,
                    "f1": k.f1,
                }
                for c, k in sorted(self.per_class.items())
            },
            "micro": {"precision": self.micro_precision, "recall": self.micro_recall, "f1": self.micro_f1},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
        }


def f1_report(counts: Mapping[int, ClassCounts]) -> MetricsReport:
    if any(k.tp < 0 or k.fp < 0 or k.fn < 0 for k in counts.values()):
        raise ConfigurationError("confusion counts must be non-negative")
    total = ClassCounts(
        sum(k.tp for k in counts.values()),
        sum(k.fp for k in counts.values()),
        sum(k.fn for k in counts.values()),
    )
    n = len(counts)

    def mean(values: Iterable[float]) -> float:
        return sum(values) / n if n else 0.0

    return MetricsReport(
        per_class=dict(sorted(counts.items())),
        micro_precision=total.precision,
        micro_recall=total.recall,
        micro_f1=total.f1,
        macro_precision=mean(k.precision for k in counts.values()),
        macro_recall=mean(k.recall for k in counts.values()),
        macro_f1=mean(k.f1 for k in counts.values()),
    )


def format_cell(micro: float, macro: float) -> str:
    return f"{percent(micro)}/{percent(macro)}"


# ============================================================================
# PRECISION AND RECALL ESTIMATION
# ============================================================================

_VERDICTS = {
    "relevant": True,
    "not_relevant": False,
    "1": True,
    "0": False,
    "y": True,
    "n": False,
    "yes": True,
    "no": False,
}


@dataclass(frozen=True, slots=True)
class Annotation:
    record_id: str
    analyst_1: bool
    analyst_2: bool


@dataclass(frozen=True, slots=True)
class PrecisionEstimate:
    precision: float
    agreement_rate: float
    sample_size: int


def parse_verdict(value: str | None, record_id: str, column: str) -> bool:
    key = (value or "").strip().lower()
    if not key:
        raise AnnotationError(f"record {record_id!r}: missing {column}")
    if key not in _VERDICTS:
        raise AnnotationError(f"record {record_id!r}: {column} {value!r} is not relevant/not_relevant")
    return _VERDICTS[key]


def read_worksheet(path: str | Path) -> list[Annotation]:
    """Read a filled review worksheet into two-analyst annotations."""
    out: list[Annotation] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        needed = {"id", "verdict_analyst_1", "verdict_analyst_2"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise AnnotationError(f"{path}: worksheet needs columns {sorted(needed)}")
        for row in reader:
            rid = row["id"]
            out.append(
                Annotation(
                    rid,
                    parse_verdict(row["verdict_analyst_1"], rid, "verdict_analyst_1"),
                    parse_verdict(row["verdict_analyst_2"], rid, "verdict_analyst_2"),
                )
            )
    return out


def estimate_precision(annotations: Sequence[Annotation]) -> PrecisionEstimate:
    """
    Precision from two independent reviews of a random sample.

    A record counts as relevant only when both analysts mark it relevant.
    The agreement rate is the share of records with identical verdicts.

    Raises:
        EmptyInputError: On an empty sample
    """
    n = len(annotations)
    if n == 0:
        raise EmptyInputError("no annotations to estimate precision from")
    relevant = sum(1 for a in annotations if a.analyst_1 and a.analyst_2)
    agree = sum(1 for a in annotations if a.analyst_1 == a.analyst_2)
    return PrecisionEstimate(relevant / n, agree / n, n)


def estimate_recall(mapping: SdgMapping, recall_set: ValidationDataset, sdg: int) -> float:
    """
    Share of a recall set's records that the mapping assigns to `sdg`.

    Raises:
        EmptyInputError: On an empty recall set
        ConfigurationError: If an item's gold set lacks `sdg`
    """
    check_sdg(sdg)
    if not recall_set.items:
        raise EmptyInputError(f"recall set {recall_set.name!r} is empty")
    for item in recall_set.items:
        if sdg not in item.gold:
            raise ConfigurationError(
                f"recall set item {item.record_id!r} is not labelled with SDG {sdg}"
            )
    covered = sum(1 for item in recall_set.items if sdg in mapping.sdgs(item.record_id))
    return covered / len(recall_set.items)


# ============================================================================
# ACCEPTANCE GATE
# ============================================================================


@dataclass(frozen=True)
class GateConfig:
    min_precision: float = 0.90
    min_recall: float = 0.60
    min_sample: int = 100

    def __post_init__(self) -> None:
        for name in ("min_precision", "min_recall"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")
        if self.min_sample < 1:
            raise ConfigurationError("min_sample must be >= 1")


@dataclass(frozen=True)
class GateDecision:
    accepted: bool
    reasons: tuple[str, ...] = ()

    def describe(self) -> str:
        return "accept" if self.accepted else "reject: " + "; ".join(self.reasons)


def gate(
    precision: float,
    recall: float,
    sample_size: int,
    config: GateConfig | None = None,
) -> GateDecision:
    """
    Query acceptance test. All thresholds are inclusive.

    Returns:
        GateDecision listing every violated condition, each reason starting
        with `precision`, `recall` or `sample_size`
    """
    config = config or GateConfig()
    reasons = []
    if not precision >= config.min_precision:
        reasons.append(f"precision {precision:.4g} < {config.min_precision:.4g}")
    if not recall >= config.min_recall:
        reasons.append(f"recall {recall:.4g} < {config.min_recall:.4g}")
    if not sample_size >= config.min_sample:
        reasons.append(f"sample_size {sample_size} < {config.min_sample}")
    return GateDecision(not reasons, tuple(reasons))


# ============================================================================
# BENCHMARK
# ============================================================================


@dataclass(frozen=True)
class BenchmarkCell:
    method: str
    dataset: str
    report: MetricsReport
    missing: int


@dataclass
class BenchmarkResult:
    methods: list[str]
    datasets: list[str]
    cells: dict[tuple[str, str], BenchmarkCell] = field(default_factory=dict)

    @property
    def missing_total(self) -> int:
        return sum(c.missing for c in self.cells.values())


def benchmark(
    methods: Mapping[str, SdgMapping], datasets: Sequence[ValidationDataset]
) -> BenchmarkResult:
    """
    Score every method against every dataset.

    Macro averages run over the classes present in each dataset's gold
    labels; ids a method never mapped count as empty predictions.
    """
    result = BenchmarkResult(list(methods), [d.name for d in datasets])
    for name, mapping in methods.items():
        for ds in datasets:
            report = f1_report(confusion(mapping, ds))
            known = set(mapping.record_ids())
            missing = sum(1 for item in ds.items if item.record_id not in known)
            result.cells[(name, ds.name)] = BenchmarkCell(name, ds.name, report, missing)
            log.debug("[evaluate] method=%s dataset=%s cell=%s", name, ds.name, report.cell())
    return result


def render_benchmark(result: BenchmarkResult) -> str:
    """Aligned text table, rows = methods, columns = datasets, cells micro/macro F1."""
    head = ["method \\ dataset"] + result.datasets
    rows = [
        [m] + [result.cells[(m, d)].report.cell() for d in result.datasets]
        for m in result.methods
    ]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [head] + rows]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def benchmark_records(result: BenchmarkResult) -> list[dict]:
    out = []
    for m in result.methods:
        for d in result.datasets:
            cell = result.cells[(m, d)]
            out.append(
                {
                    "method": m,
                    "dataset": d,
                    "cell": cell.report.cell(),
                    "missing": cell.missing,
                    **cell.report.to_dict(),
                }
            )
    return out


def render_per_class(result: BenchmarkResult, dataset: str) -> str:
    """Per-SDG F1 of every method on one dataset."""
    classes = sorted({c for (m, d), cell in result.cells.items() if d == dataset for c in cell.report.per_class})
    lines = ["SDG | " + " | ".join(result.methods)]
    for c in classes:
        vals = [str(percent(result.cells[(m, dataset)].report.per_class[c].f1)) for m in result.methods]
        lines.append(f"{c} | " + " | ".join(vals))
    return "\n".join(lines)


# ============================================================================
# MAPPING COMPARISON
# ============================================================================


@dataclass(frozen=True, slots=True)
class ComparisonRow:
    sdg: int
    count_a: int
    count_b: int
    intersection: int

    def render(self) -> str:
        return f"{self.sdg} | {self.count_a} | {self.count_b} | {self.intersection}"


def compare_mappings(
    a: SdgMapping, b: SdgMapping, sdgs: Iterable[int] | None = None
) -> list[ComparisonRow]:
    """
    Per-SDG record counts of two mappings and their overlap.

    Args:
        a, b: Mappings over the same id space
        sdgs: SDGs to report (default: every SDG either mapping uses)
    """
    if sdgs is None:
        used = {s for m in (a, b) for sdgs_ in m.assignments.values() for s in sdgs_}
        sdgs = sorted(used)
    rows = []
    for s in sdgs:
        check_sdg(s)
        ra, rb = a.records_for(s), b.records_for(s)
        rows.append(ComparisonRow(s, len(ra), len(rb), len(ra & rb)))
    return rows


def render_comparison(rows: Sequence[ComparisonRow], label_a: str = "A", label_b: str = "B") -> str:
    lines = [f"SDG | {label_a} | {label_b} | Intersection"]
    lines += [r.render() for r in rows]
    return "\n".join(lines)


def write_comparison_csv(
    rows: Sequence[ComparisonRow], path: str | Path, label_a: str = "a", label_b: str = "b"
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sdg", label_a, label_b, "intersection"])
        for r in rows:
            writer.writerow([r.sdg, r.count_a, r.count_b, r.intersection])
