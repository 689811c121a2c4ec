"""
Two-stage combination of query hits and model predictions.

Query assignments are kept as they are; the model only adds (record, SDG)
pairs whose predicted probability reaches the threshold and that the
queries did not already assign.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .common import SDG_IDS, ConfigurationError, Provenance, SdgMapping

log = logging.getLogger(__name__)

DEFAULT_THETA = 0.95


def combine(
    query_mapping: SdgMapping,
    scores: Mapping[str, Mapping[int, float]],
    theta: float = DEFAULT_THETA,
) -> SdgMapping:
    """
    Union query assignments with thresholded model predictions.

    Args:
        query_mapping: Output of the query stage
        scores: record id -> {sdg: probability}
        theta: Minimum probability for an ML assignment, in (0, 1]

    Returns:
        A new mapping containing every query assignment unchanged plus
        (r, s) with ML provenance whenever score_s(r) >= theta. Scores are
        stored for every scored pair present in the result.

    Raises:
        ConfigurationError: If theta is outside (0, 1]
    """
    if not 0.0 < theta <= 1.0:
        raise ConfigurationError(f"theta must lie in (0, 1], got {theta}")

    out = SdgMapping()
    for rid, sdg in sorted(query_mapping.pairs(Provenance.QUERY)):
        themes = query_mapping.theme_hits.get(rid, {}).get(sdg, ())
        if themes:
            for theme in sorted(themes):
                out.add_theme_hit(rid, sdg, theme)
        else:
            out.assign(rid, sdg, Provenance.QUERY)

    added = 0
    for rid in sorted(scores):
        for sdg, p in sorted(scores[rid].items()):
            if p >= theta and out.provenance(rid, sdg) is None:
                out.assign(rid, sdg, Provenance.ML)
                added += 1
            if out.provenance(rid, sdg) is not None:
                out.set_score(rid, sdg, p)

    log.info(
        "[combine] theta=%s query_pairs=%d ml_pairs=%d",
        theta,
        len(query_mapping.pairs(Provenance.QUERY)),
        added,
    )
    return out


# ============================================================================
# PROVENANCE REPORT
# ============================================================================


@dataclass(frozen=True)
class ProvenanceRow:
    sdg: int
    query_count: int
    ml_count: int

    @property
    def ml_share(self) -> float:
        total = self.query_count + self.ml_count
        return self.ml_count / total if total else 0.0


@dataclass(frozen=True)
class ProvenanceReport:
    """
    Per-SDG split of assignments by provenance.

    Attributes:
        rows: One row per reported SDG, ascending
        query_records: Distinct records with at least one query assignment
        ml_only_records: Records mapped by the model alone
    """

    rows: tuple[ProvenanceRow, ...]
    query_records: int
    ml_only_records: int

    @property
    def added_share(self) -> float:
        """Records the model adds, relative to the records the queries map."""
        return self.ml_only_records / self.query_records if self.query_records else 0.0


def provenance_report(mapping: SdgMapping, include_sdg17: bool = False) -> ProvenanceReport:
    """
    Count assignments per SDG by provenance.

    SDG 17 is left out unless `include_sdg17` is set.
    """
    sdgs = [s for s in SDG_IDS if include_sdg17 or s != 17]
    rows = tuple(
        ProvenanceRow(
            sdg,
            len(mapping.records_for(sdg, Provenance.QUERY)),
            len(mapping.records_for(sdg, Provenance.ML)),
        )
        for sdg in sdgs
    )
    query_records = 0
    ml_only = 0
    for rid in mapping.record_ids():
        provs = {
            p for s, p in mapping.assignments[rid].items() if s in sdgs
        }
        if Provenance.QUERY in provs:
            query_records += 1
        elif Provenance.ML in provs:
            ml_only += 1
    return ProvenanceReport(rows, query_records, ml_only)


def render_provenance(report: ProvenanceReport) -> str:
    lines = [f"{'SDG':>3}  {'query':>8}  {'ml':>8}  {'ml_share':>8}"]
    for row in report.rows:
        lines.append(
            f"{row.sdg:>3}  {row.query_count:>8}  {row.ml_count:>8}  {row.ml_share:>8.4f}"
        )
    lines.append(
        f"records: query={report.query_records} ml_only={report.ml_only_records} "
        f"added_share={report.added_share:.4f}"
    )
    return "\n".join(lines)


def provenance_records(report: ProvenanceReport) -> list[dict]:
    rows: list[dict] = [
        {
            "sdg": r.sdg,
            "query_count": r.query_count,
            "ml_count": r.ml_count,
            "ml_share": r.ml_share,
        }
        for r in report.rows
    ]
    rows.append(
        {
            "total": True,
            "query_records": report.query_records,
            "ml_only_records": report.ml_only_records,
            "added_share": report.added_share,
        }
    )
    return rows


def write_plot_data(report: ProvenanceReport, path: str | Path) -> None:
    """Write `sdg,query_count,ml_count` rows for external charting."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sdg", "query_count", "ml_count"])
        for r in report.rows:
            writer.writerow([r.sdg, r.query_count, r.ml_count])
