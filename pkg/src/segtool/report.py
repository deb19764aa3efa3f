"""Batch reports: agreement, method scores, and per-strength breakdowns.

A batch is a list of narratives with their annotation matrices and,
optionally, clause codings. The report has three blocks:

* agreement: per-narrative percent agreement with a pooled column of
  unweighted means and population variances over narratives
* methods: recall/precision/fallout/error for the three segmenters and for
  the human subjects, averaged with variances
* strengths: recall and precision against sites of each exact agreement
  strength, plus the mean number of such sites

Algorithm scores aggregate per narrative; human scores aggregate per
subject-narrative observation. Undefined ratios are skipped, and the
report records how many observations each cell kept.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .agreement import AgreementReport, boundary_strengths, percent_agreement
from .corpus import AnnotationMatrix, FicCoding, Narrative
from .errors import ValidationError
from .evaluation import (
    METRIC_NAMES,
    MetricAggregate,
    aggregate_metric,
    confusion,
    evaluate_humans,
    metrics,
    target_boundaries,
)
from .segmenters import CueLexicon, cue_segment, np_segment, normalize_to_sites, pause_segment

METHODS = ("np", "cue", "pause", "humans")


@dataclass(frozen=True)
class BatchItem:
    """One narrative's inputs; the coding is optional."""

    narrative: Narrative
    matrix: AnnotationMatrix
    coding: FicCoding | None = None

    def __post_init__(self):
        nid = self.narrative.narrative_id
        if self.matrix.narrative_id != nid:
            raise ValidationError(
                f"matrix of {self.matrix.narrative_id} paired with narrative {nid}"
            )
        if self.coding is not None and self.coding.narrative_id != nid:
            raise ValidationError(
                f"coding of {self.coding.narrative_id} paired with narrative {nid}"
            )


@dataclass(frozen=True)
class AgreementRow:
    narrative_id: str
    subjects: int
    sites: int
    marks: int
    report: AgreementReport


@dataclass(frozen=True)
class Report:
    threshold: int | None
    agreement_rows: tuple[AgreementRow, ...]
    agreement_summary: dict[str, object]
    method_table: dict[str, dict[str, MetricAggregate]]
    strength_levels: tuple[int, ...]
    strength_site_counts: dict[int, Fraction]
    strength_table: dict[str, dict[str, dict[int, MetricAggregate]]]

    def to_json(self) -> str:
        def num(x):
            if x is None:
                return None
            if isinstance(x, Fraction):
                return float(x)
            return x

        def agg(a: MetricAggregate) -> dict:
            return {
                "mean": num(a.mean),
                "variance": num(a.variance),
                "count": a.count,
                "skipped": a.skipped,
            }

        payload = {
            "threshold": self.threshold if self.threshold is not None else "majority",
            "agreement": {
                "narratives": [
                    {
                        "narrative_id": row.narrative_id,
                        "subjects": row.subjects,
                        "sites": row.sites,
                        "opinions": row.marks,
                        "boundary_sites": row.report.boundary_site_count,
                        "non_boundary_sites": row.report.non_boundary_site_count,
                        "percent": num(row.report.percent),
                        "percent_boundary": num(row.report.percent_boundary),
                        "percent_non_boundary": num(row.report.percent_non_boundary),
                    }
                    for row in self.agreement_rows
                ],
                "summary": {
                    key: (agg(value) if isinstance(value, MetricAggregate) else num(value))
                    for key, value in self.agreement_summary.items()
                },
            },
            "methods": {
                method: {name: agg(self.method_table[method][name]) for name in METRIC_NAMES}
                for method in METHODS
            },
            "strengths": {
                "levels": list(self.strength_levels),
                "sites_mean": {
                    str(t): num(self.strength_site_counts[t]) for t in self.strength_levels
                },
                "methods": {
                    method: {
                        name: {
                            str(t): agg(self.strength_table[method][name][t])
                            for t in self.strength_levels
                        }
                        for name in ("recall", "precision")
                    }
                    for method in METHODS
                },
            },
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_tsv(self) -> str:
        def ratio(x) -> str:
            return "NA" if x is None else f"{float(x):.2f}"

        def var(x) -> str:
            return "NA" if x is None else f"{float(x):.4f}"

        lines = ["# agreement"]
        ids = [row.narrative_id for row in self.agreement_rows]
        lines.append("\t".join(["row", *ids, "all", "variance"]))
        summary = self.agreement_summary

        def count_row(label, values, total):
            lines.append("\t".join([label, *[str(v) for v in values], str(total), ""]))

        def percent_row(label, values, agg: MetricAggregate):
            lines.append(
                "\t".join(
                    [label, *[ratio(v) for v in values], ratio(agg.mean), var(agg.variance)]
                )
            )

        count_row(
            "opinions", [row.marks for row in self.agreement_rows], summary["opinions"]
        )
        percent_row(
            "percent",
            [row.report.percent for row in self.agreement_rows],
            summary["percent"],
        )
        count_row(
            "boundary_sites",
            [row.report.boundary_site_count for row in self.agreement_rows],
            summary["boundary_sites"],
        )
        percent_row(
            "percent_boundary",
            [row.report.percent_boundary for row in self.agreement_rows],
            summary["percent_boundary"],
        )
        count_row(
            "non_boundary_sites",
            [row.report.non_boundary_site_count for row in self.agreement_rows],
            summary["non_boundary_sites"],
        )
        percent_row(
            "percent_non_boundary",
            [row.report.percent_non_boundary for row in self.agreement_rows],
            summary["percent_non_boundary"],
        )

        lines.append("")
        label = self.threshold if self.threshold is not None else "majority"
        lines.append(f"# methods threshold={label}")
        header = ["method"]
        for name in METRIC_NAMES:
            header += [name, f"{name}_variance"]
        lines.append("\t".join(header))
        for method in METHODS:
            cells = [method]
            for name in METRIC_NAMES:
                agg = self.method_table[method][name]
                cells += [ratio(agg.mean), var(agg.variance)]
            lines.append("\t".join(cells))

        lines.append("")
        lines.append("# strengths")
        lines.append("\t".join(["strength", *[str(t) for t in self.strength_levels]]))
        lines.append(
            "\t".join(
                [
                    "sites",
                    *[
                        f"{float(self.strength_site_counts[t]):.1f}"
                        for t in self.strength_levels
                    ],
                ]
            )
        )
        for method in METHODS:
            for name in ("recall", "precision"):
                cells = [f"{method}_{name}"]
                for t in self.strength_levels:
                    cells.append(ratio(self.strength_table[method][name][t].mean))
                lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def _predictions(item: BatchItem, lexicon: CueLexicon | None):
    out = {
        "cue": cue_segment(item.narrative, lexicon),
        "pause": pause_segment(item.narrative),
    }
    if item.coding is not None:
        out["np"] = normalize_to_sites(np_segment(item.coding), item.coding)
    return out


def build_report(
    items,
    cue_lexicon: CueLexicon | None = None,
    threshold: int | None = None,
) -> Report:
    """Assemble the three report blocks for a batch.

    threshold of None means each narrative's strict majority. Narratives
    without a coding simply contribute nothing to the np cells.
    """
    items = list(items)
    if not items:
        raise ValidationError("empty batch")
    ids = [item.narrative.narrative_id for item in items]
    if len(set(ids)) != len(ids):
        raise ValidationError("narrative ids in a batch must be distinct")

    agreement_rows = []
    method_values: dict[str, dict[str, list]] = {
        m: {name: [] for name in METRIC_NAMES} for m in METHODS
    }
    max_subjects = max(item.matrix.subjects for item in items)
    levels = tuple(range(1, max_subjects + 1))
    strength_values: dict[str, dict[str, dict[int, list]]] = {
        m: {name: {t: [] for t in levels} for name in ("recall", "precision")}
        for m in METHODS
    }
    site_counts: dict[int, list] = {t: [] for t in levels}

    for item in items:
        matrix = item.matrix
        agreement = percent_agreement(matrix, threshold)
        agreement_rows.append(
            AgreementRow(
                narrative_id=matrix.narrative_id,
                subjects=matrix.subjects,
                sites=matrix.sites,
                marks=int(matrix.row_totals.sum()),
                report=agreement,
            )
        )

        predictions = _predictions(item, cue_lexicon)
        target = target_boundaries(matrix, threshold=threshold)
        for method in ("np", "cue", "pause"):
            if method not in predictions:
                continue
            scored = metrics(confusion(predictions[method], target, matrix.sites))
            for name in METRIC_NAMES:
                method_values[method][name].append(scored.as_dict()[name])
        humans = evaluate_humans(matrix, threshold=threshold)
        for subject in humans.per_subject:
            for name in METRIC_NAMES:
                method_values["humans"][name].append(subject.scores.as_dict()[name])

        strengths = boundary_strengths(matrix)
        for t in levels:
            if t > matrix.subjects:
                continue
            exact_target = strengths.exact(t)
            site_counts[t].append(Fraction(len(exact_target.sites)))
            for method in ("np", "cue", "pause"):
                if method not in predictions:
                    continue
                scored = metrics(
                    confusion(predictions[method], exact_target, matrix.sites)
                )
                strength_values[method]["recall"][t].append(scored.recall)
                strength_values[method]["precision"][t].append(scored.precision)
            humans_exact = evaluate_humans(matrix, exact=t)
            for subject in humans_exact.per_subject:
                strength_values["humans"]["recall"][t].append(subject.scores.recall)
                strength_values["humans"]["precision"][t].append(subject.scores.precision)

    percent_agg = aggregate_metric([row.report.percent for row in agreement_rows])
    boundary_agg = aggregate_metric(
        [row.report.percent_boundary for row in agreement_rows]
    )
    non_boundary_agg = aggregate_metric(
        [row.report.percent_non_boundary for row in agreement_rows]
    )
    agreement_summary = {
        "narratives": len(agreement_rows),
        "opinions": sum(row.marks for row in agreement_rows),
        "boundary_sites": sum(row.report.boundary_site_count for row in agreement_rows),
        "non_boundary_sites": sum(
            row.report.non_boundary_site_count for row in agreement_rows
        ),
        "percent": percent_agg,
        "percent_boundary": boundary_agg,
        "percent_non_boundary": non_boundary_agg,
    }

    method_table = {
        m: {name: aggregate_metric(method_values[m][name]) for name in METRIC_NAMES}
        for m in METHODS
    }
    strength_site_counts = {
        t: (
            sum(site_counts[t], Fraction(0)) / len(site_counts[t])
            if site_counts[t]
            else Fraction(0)
        )
        for t in levels
    }
    strength_table = {
        m: {
            name: {t: aggregate_metric(strength_values[m][name][t]) for t in levels}
            for name in ("recall", "precision")
        }
        for m in METHODS
    }
    return Report(
        threshold=threshold,
        agreement_rows=tuple(agreement_rows),
        agreement_summary=agreement_summary,
        method_table=method_table,
        strength_levels=levels,
        strength_site_counts=strength_site_counts,
        strength_table=strength_table,
    )
