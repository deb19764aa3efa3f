"""Command-line front end.

Subcommands: agree, strengths, cochran, segment, eval, report. Exit codes:
0 success, 1 invalid input or usage, 2 I/O failure, 3 statistic undefined
for the given data. Output goes to stdout only after all computation has
succeeded, as TSV tables (ratios to 2 decimals, p-values in scientific
notation) or as JSON with full float precision under --json. For fixed
arguments, input files, and seed the output is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .agreement import boundary_strengths, majority_threshold, percent_agreement
from .corpus import load_annotations, load_fic_coding, load_narrative
from .errors import DegenerateDataError, ValidationError
from .evaluation import (
    METRIC_NAMES,
    confusion,
    evaluate_humans,
    metrics,
    target_boundaries,
)
from .report import BatchItem, build_report
from .segmenters import (
    CueLexicon,
    cue_segment,
    default_cue_lexicon,
    normalize_to_sites,
    np_segment,
    pause_segment,
)
from .significance import cochran_q, null_calibration


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        self.parser = parser
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(self, message)


def _ratio(x) -> str:
    return "NA" if x is None else f"{float(x):.2f}"


def _pvalue(x) -> str:
    return "NA" if x is None else f"{float(x):.2e}"


def _num(x):
    if x is None:
        return None
    if isinstance(x, Fraction):
        return float(x)
    return x


def _read(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _load_pair(args):
    narrative = load_narrative(_read(args.narrative))
    matrix = load_annotations(_read(args.annotations), narrative)
    return narrative, matrix


def _lexicon(path: str | None) -> CueLexicon:
    return default_cue_lexicon() if path is None else CueLexicon.from_file(path)


def _set_text(values, narrative=None) -> str:
    if not values:
        return "-"
    return ",".join(str(v) for v in sorted(values))


# ---------------------------------------------------------------------------
# Subcommand handlers, each returning the full stdout payload.


def _cmd_agree(args) -> str:
    narrative, matrix = _load_pair(args)
    report = percent_agreement(matrix, args.threshold)
    if args.format == "json":
        def block(observed, possible, percent):
            return {
                "observed": observed,
                "possible": possible,
                "percent": _num(percent),
            }

        payload = {
            "narrative_id": report.narrative_id,
            "subjects": report.subjects,
            "sites": report.sites,
            "threshold": report.threshold,
            "total": block(report.observed, report.possible, report.percent),
            "boundary": block(
                report.observed_boundary,
                report.possible_boundary,
                report.percent_boundary,
            ),
            "non_boundary": block(
                report.observed_non_boundary,
                report.possible_non_boundary,
                report.percent_non_boundary,
            ),
        }
        return json.dumps(payload, indent=2) + "\n"
    lines = ["narrative\tclass\tobserved\tpossible\tpercent"]
    for label, observed, possible, percent in (
        ("all", report.observed, report.possible, report.percent),
        ("boundary", report.observed_boundary, report.possible_boundary, report.percent_boundary),
        (
            "non_boundary",
            report.observed_non_boundary,
            report.possible_non_boundary,
            report.percent_non_boundary,
        ),
    ):
        lines.append(
            f"{report.narrative_id}\t{label}\t{observed}\t{possible}\t{_ratio(percent)}"
        )
    return "\n".join(lines) + "\n"


def _cmd_strengths(args) -> str:
    narrative, matrix = _load_pair(args)
    strengths = boundary_strengths(matrix)
    if args.format == "json":
        payload = {
            "narrative_id": matrix.narrative_id,
            "subjects": matrix.subjects,
            "sites": matrix.sites,
            "strengths": [
                {
                    "strength": t,
                    "exact": {
                        "count": len(strengths.exact(t).sites),
                        "sites": list(strengths.exact(t).labels(narrative)),
                    },
                    "cumulative": {
                        "count": len(strengths.cumulative(t).sites),
                        "sites": list(strengths.cumulative(t).labels(narrative)),
                    },
                }
                for t in range(1, matrix.subjects + 1)
            ],
        }
        return json.dumps(payload, indent=2) + "\n"
    lines = ["strength\tkind\tcount\tsites"]
    for t in range(1, matrix.subjects + 1):
        for kind, sites in (
            ("exact", strengths.exact(t)),
            ("cumulative", strengths.cumulative(t)),
        ):
            labels = sites.labels(narrative)
            lines.append(
                f"{t}\t{kind}\t{len(labels)}\t{','.join(labels) if labels else '-'}"
            )
    return "\n".join(lines) + "\n"


def _cmd_cochran(args) -> str:
    narrative, matrix = _load_pair(args)
    result = cochran_q(matrix, component_df=args.component_df)
    calibration = None
    if args.calibrate is not None:
        calibration = null_calibration(
            [int(x) for x in matrix.row_totals],
            matrix.sites,
            trials=args.calibrate,
            seed=args.seed,
            observed_q=result.q,
        )
    if args.format == "json":
        payload = {
            "narrative_id": matrix.narrative_id,
            "q": result.q,
            "df": result.df,
            "p": result.p,
            "components": [
                {
                    "strength": comp.strength,
                    "sites": comp.site_count,
                    "q": comp.q,
                    "df": comp.df,
                    "p": comp.p,
                }
                for comp in result.components.values()
            ],
        }
        if calibration is not None:
            payload["calibration"] = {
                "trials": calibration.trials,
                "seed": calibration.seed,
                "degenerate_trials": calibration.degenerate_trials,
                "quantiles": {
                    f"{level:.2f}": calibration.quantiles[level]
                    for level in sorted(calibration.quantiles)
                },
                "chi_square_quantiles": {
                    f"{level:.2f}": calibration.reference_quantiles[level]
                    for level in sorted(calibration.reference_quantiles)
                },
                "rejection_rate_05": calibration.rejection_rate_05,
                "empirical_p": calibration.empirical_p,
            }
        return json.dumps(payload, indent=2) + "\n"
    lines = [
        "statistic\tvalue",
        f"q\t{result.q:.2f}",
        f"df\t{result.df}",
        f"p\t{_pvalue(result.p)}",
        "",
        "strength\tsites\tq\tdf\tp",
    ]
    for t in sorted(result.components):
        comp = result.components[t]
        lines.append(
            f"{comp.strength}\t{comp.site_count}\t{comp.q:.2f}\t{comp.df}\t{_pvalue(comp.p)}"
        )
    if calibration is not None:
        lines.append("")
        lines.append(f"# calibration trials={calibration.trials} seed={calibration.seed}")
        lines.append("level\tempirical_q\tchi_square_q")
        for level in sorted(calibration.quantiles):
            lines.append(
                f"{level:.2f}\t{calibration.quantiles[level]:.2f}"
                f"\t{calibration.reference_quantiles[level]:.2f}"
            )
        lines.append(f"rejection_rate_05\t{calibration.rejection_rate_05:.4f}\t")
        lines.append(f"empirical_p\t{_pvalue(calibration.empirical_p)}\t")
    return "\n".join(lines) + "\n"


def _cmd_segment(args) -> str:
    narrative = load_narrative(_read(args.narrative))
    trace = None
    clause_boundaries = None
    if args.method == "np":
        if args.coding is None:
            raise ValidationError("--method np requires --coding")
        coding = load_fic_coding(_read(args.coding), narrative)
        segmentation = np_segment(coding)
        boundaries = normalize_to_sites(segmentation, coding)
        clause_boundaries = segmentation.boundaries
        if args.trace:
            trace = segmentation.trace
    else:
        if args.coding is not None:
            raise ValidationError("--coding only applies to --method np")
        if args.trace:
            raise ValidationError("--trace only applies to --method np")
        if args.method == "cue":
            boundaries = cue_segment(narrative, _lexicon(args.cues))
        else:
            if args.cues is not None:
                raise ValidationError("--cues only applies to --method cue")
            boundaries = pause_segment(narrative)
    sites = sorted(boundaries.sites)
    labels = boundaries.labels(narrative)
    if args.format == "json":
        payload = {
            "narrative_id": narrative.narrative_id,
            "method": args.method,
            "sites": sites,
            "pairs": list(labels),
        }
        if clause_boundaries is not None:
            payload["clause_boundaries"] = [list(pair) for pair in clause_boundaries]
        if trace is not None:
            payload["trace"] = [
                {
                    "fic": step.fic,
                    "tests": [[name, passed] for name, passed in step.tests],
                    "linked_by": step.linked_by,
                    "clause_referents": sorted(step.clause_referents),
                    "inferable_referents": sorted(step.inferable_referents),
                    "pronoun_referents": sorted(step.pronoun_referents),
                    "segment_referents": sorted(step.segment_referents),
                }
                for step in trace
            ]
        return json.dumps(payload, indent=2) + "\n"
    lines = ["site\tpair"]
    for site, label in zip(sites, labels):
        lines.append(f"{site}\t{label}")
    if clause_boundaries is not None:
        lines.append("")
        lines.append("# clause_boundaries")
        lines.append("left\tright")
        for left, right in clause_boundaries:
            lines.append(f"{left}\t{right}")
    if trace is not None:
        lines.append("")
        lines.append("# trace")
        lines.append("fic\ttests\tlinked_by\tclause_referents\tinferable\tpronouns\tsegment")
        for step in trace:
            tests = ",".join(
                f"{name}:{'pass' if passed else 'fail'}" for name, passed in step.tests
            )
            lines.append(
                "\t".join(
                    [
                        str(step.fic),
                        tests,
                        step.linked_by or "boundary",
                        _set_text(step.clause_referents),
                        _set_text(step.inferable_referents),
                        _set_text(step.pronoun_referents),
                        _set_text(step.segment_referents),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def _cmd_eval(args) -> str:
    narrative, matrix = _load_pair(args)
    if args.method == "humans":
        if args.coding is not None or args.cues is not None:
            raise ValidationError("--method humans takes neither --coding nor --cues")
        human = evaluate_humans(
            matrix,
            threshold=args.threshold,
            exact=args.exact,
            leave_one_out=args.leave_one_out,
        )
        if args.format == "json":
            payload = {
                "narrative_id": matrix.narrative_id,
                "method": "humans",
                "target": human.mode,
                "subjects": [
                    {
                        "subject": score.subject_id,
                        "confusion": {
                            "a": score.counts.a,
                            "b": score.counts.b,
                            "c": score.counts.c,
                            "d": score.counts.d,
                        },
                        "metrics": {
                            name: _num(score.scores.as_dict()[name])
                            for name in METRIC_NAMES
                        },
                    }
                    for score in human.per_subject
                ],
                "summary": {
                    name: {
                        "mean": _num(human.summary[name].mean),
                        "variance": _num(human.summary[name].variance),
                        "count": human.summary[name].count,
                        "skipped": human.summary[name].skipped,
                    }
                    for name in METRIC_NAMES
                },
            }
            return json.dumps(payload, indent=2) + "\n"
        lines = [
            "narrative\tmethod\ttarget\tunit\ta\tb\tc\td\trecall\tprecision\tfallout\terror"
        ]
        for score in human.per_subject:
            cells = [
                matrix.narrative_id,
                "humans",
                human.mode,
                score.subject_id,
                str(score.counts.a),
                str(score.counts.b),
                str(score.counts.c),
                str(score.counts.d),
            ]
            cells += [_ratio(score.scores.as_dict()[name]) for name in METRIC_NAMES]
            lines.append("\t".join(cells))
        for row_label, pick in (("mean", "mean"), ("variance", "variance")):
            cells = [matrix.narrative_id, "humans", human.mode, row_label, "", "", "", ""]
            for name in METRIC_NAMES:
                value = getattr(human.summary[name], pick)
                cells.append(_ratio(value) if pick == "mean" else
                             ("NA" if value is None else f"{float(value):.4f}"))
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"

    if args.leave_one_out:
        raise ValidationError("--leave-one-out only applies to --method humans")
    if args.method != "np" and args.coding is not None:
        raise ValidationError("--coding only applies to --method np")
    if args.method not in ("cue",) and args.cues is not None:
        raise ValidationError("--cues only applies to --method cue")
    if args.method == "np":
        if args.coding is None:
            raise ValidationError("--method np requires --coding")
        coding = load_fic_coding(_read(args.coding), narrative)
        predicted = normalize_to_sites(np_segment(coding), coding)
    elif args.method == "cue":
        predicted = cue_segment(narrative, _lexicon(args.cues))
    else:
        predicted = pause_segment(narrative)
    target = target_boundaries(matrix, threshold=args.threshold, exact=args.exact)
    if args.exact is not None:
        mode = f"exact={args.exact}"
    else:
        threshold = args.threshold
        if threshold is None:
            threshold = majority_threshold(matrix.subjects)
        mode = f"threshold={threshold}"
    counts = confusion(predicted, target, matrix.sites)
    scored = metrics(counts)
    if args.format == "json":
        payload = {
            "narrative_id": matrix.narrative_id,
            "method": args.method,
            "target": mode,
            "confusion": {"a": counts.a, "b": counts.b, "c": counts.c, "d": counts.d},
            "metrics": {
                name: _num(scored.as_dict()[name]) for name in METRIC_NAMES
            },
        }
        return json.dumps(payload, indent=2) + "\n"
    lines = [
        "narrative\tmethod\ttarget\tunit\ta\tb\tc\td\trecall\tprecision\tfallout\terror"
    ]
    cells = [
        matrix.narrative_id,
        args.method,
        mode,
        "algorithm",
        str(counts.a),
        str(counts.b),
        str(counts.c),
        str(counts.d),
    ]
    cells += [_ratio(scored.as_dict()[name]) for name in METRIC_NAMES]
    lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> str:
    manifest_path = Path(args.batch)
    raw = json.loads(_read(args.batch).decode("utf-8"))
    if not isinstance(raw, dict) or not isinstance(raw.get("items"), list) or not raw["items"]:
        raise ValidationError("manifest must be an object with a non-empty items list")
    base = manifest_path.parent

    def resolve(path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else base / p

    items = []
    for k, entry in enumerate(raw["items"]):
        if not isinstance(entry, dict) or "narrative" not in entry or "annotations" not in entry:
            raise ValidationError(
                f"items[{k}]: each item needs narrative and annotations paths"
            )
        narrative = load_narrative(_read(str(resolve(entry["narrative"]))))
        matrix = load_annotations(_read(str(resolve(entry["annotations"]))), narrative)
        coding = None
        if entry.get("coding"):
            coding = load_fic_coding(_read(str(resolve(entry["coding"]))), narrative)
        items.append(BatchItem(narrative=narrative, matrix=matrix, coding=coding))

    lexicon = None
    if args.cues is not None:
        lexicon = CueLexicon.from_file(args.cues)
    elif raw.get("cues"):
        lexicon = CueLexicon.from_file(str(resolve(raw["cues"])))

    fmt = args.format
    if fmt is None:
        fmt = raw.get("format", "tsv")
        if fmt not in ("tsv", "json"):
            raise ValidationError(f"manifest format must be 'tsv' or 'json', got {fmt!r}")

    report = build_report(items, cue_lexicon=lexicon, threshold=args.threshold)
    text = report.to_json() if fmt == "json" else report.to_tsv()
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        return ""
    return text


# ---------------------------------------------------------------------------
# Argument wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="segtool", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def formats(p, default="tsv"):
        group = p.add_mutually_exclusive_group()
        group.add_argument(
            "--json", dest="format", action="store_const", const="json",
            help="machine-readable output, full precision",
        )
        group.add_argument(
            "--tsv", dest="format", action="store_const", const="tsv",
            help="tab-separated tables, ratios to 2 decimals",
        )
        p.set_defaults(format=default)

    agree = sub.add_parser("agree", help="percent agreement with the majority opinion")
    agree.add_argument("--narrative", required=True, help="transcript JSON file")
    agree.add_argument("--annotations", required=True, help="annotation matrix JSON file")
    agree.add_argument("--threshold", type=int, default=None,
                       help="boundary threshold, default strict majority")
    formats(agree)
    agree.set_defaults(handler=_cmd_agree)

    strengths = sub.add_parser("strengths", help="sites grouped by agreement strength")
    strengths.add_argument("--narrative", required=True)
    strengths.add_argument("--annotations", required=True)
    formats(strengths)
    strengths.set_defaults(handler=_cmd_strengths)

    cochran = sub.add_parser("cochran", help="Cochran's Q with per-strength partition")
    cochran.add_argument("--narrative", required=True)
    cochran.add_argument("--annotations", required=True)
    cochran.add_argument("--component-df", choices=("count", "count-1"), default="count",
                         help="degrees of freedom rule for partition components")
    cochran.add_argument("--calibrate", type=int, default=None, metavar="TRIALS",
                         help="also simulate the null with this many trials")
    cochran.add_argument("--seed", type=int, default=0, help="simulation seed")
    formats(cochran)
    cochran.set_defaults(handler=_cmd_cochran)

    segment = sub.add_parser("segment", help="propose boundaries for a transcript")
    segment.add_argument("--method", required=True, choices=("np", "cue", "pause"))
    segment.add_argument("--narrative", required=True)
    segment.add_argument("--coding", default=None, help="clause coding JSON (np only)")
    segment.add_argument("--cues", default=None, help="cue lexicon file (cue only)")
    segment.add_argument("--trace", action="store_true",
                         help="include the per-clause decision trace (np only)")
    formats(segment)
    segment.set_defaults(handler=_cmd_segment)

    evaluate = sub.add_parser("eval", help="score a method against the pooled opinion")
    evaluate.add_argument("--method", required=True, choices=("np", "cue", "pause", "humans"))
    evaluate.add_argument("--narrative", required=True)
    evaluate.add_argument("--annotations", required=True)
    evaluate.add_argument("--coding", default=None)
    evaluate.add_argument("--cues", default=None)
    target = evaluate.add_mutually_exclusive_group()
    target.add_argument("--threshold", type=int, default=None,
                        help="score against sites with at least this many marks")
    target.add_argument("--exact", type=int, default=None,
                        help="score against sites with exactly this many marks")
    evaluate.add_argument("--leave-one-out", action="store_true",
                          help="score each subject against the others only (humans)")
    formats(evaluate)
    evaluate.set_defaults(handler=_cmd_eval)

    report = sub.add_parser("report", help="batch report: agreement, methods, strengths")
    report.add_argument("--batch", required=True, help="manifest JSON file")
    report.add_argument("--out", default=None, help="write the report here instead of stdout")
    report.add_argument("--cues", default=None)
    report.add_argument("--threshold", type=int, default=None)
    formats(report, default=None)
    report.set_defaults(handler=_cmd_report)

    return parser


def run(argv, stdout=None, stderr=None) -> int:
    """Parse argv, execute, and write the result; returns the exit code."""
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        err.write(exc.parser.format_usage())
        err.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "handler", None) is None:
        err.write(parser.format_usage())
        err.write("error: a subcommand is required\n")
        return 1
    try:
        text = args.handler(args)
    except DegenerateDataError as exc:
        err.write(f"error: {exc}\n")
        return 3
    except ValidationError as exc:
        err.write(f"error: {exc}\n")
        return 1
    except json.JSONDecodeError as exc:
        err.write(f"error: not valid JSON: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 2
    out.write(text)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
