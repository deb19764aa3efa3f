"""Command-line behaviour: output bytes, exit codes, determinism."""

from __future__ import annotations

import io
import json
import shutil

import numpy as np
import pytest

from segtool import AnnotationMatrix, fixture_path, serialize_annotations
from segtool.cli import run


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = run(list(argv), stdout=out, stderr=err)
    return rc, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    """A directory of input files the CLI can be pointed at."""
    root = tmp_path_factory.mktemp("cli-data")
    for name in (
        "pear9_excerpt_narrative.json",
        "pear9_excerpt_annotations.json",
        "three_link_tests_narrative.json",
        "three_link_tests_coding.json",
    ):
        shutil.copy(fixture_path(name), root / name)
    links = AnnotationMatrix(
        "synthetic-links",
        ["s1", "s2", "s3"],
        np.array([[0, 0, 1], [0, 1, 1], [1, 0, 1]], dtype=np.int64),
    )
    (root / "three_link_tests_annotations.json").write_text(
        json.dumps(serialize_annotations(links))
    )
    flat = AnnotationMatrix(
        "synthetic-links",
        ["s1", "s2"],
        np.zeros((2, 3), dtype=np.int64),
    )
    (root / "all_zero_annotations.json").write_text(
        json.dumps(serialize_annotations(flat))
    )
    (root / "maybe_cues.txt").write_text("# test lexicon\nmaybe\n")
    (root / "not_json.json").write_text("{ truncated")
    return root


def pear_args(data):
    return (
        "--narrative", str(data / "pear9_excerpt_narrative.json"),
        "--annotations", str(data / "pear9_excerpt_annotations.json"),
    )


def link_args(data):
    return (
        "--narrative", str(data / "three_link_tests_narrative.json"),
        "--annotations", str(data / "three_link_tests_annotations.json"),
    )


class TestAgree:
    def test_tsv_bytes(self, data):
        rc, out, err = invoke("agree", *pear_args(data))
        assert (rc, err) == (0, "")
        assert out == (
            "narrative\tclass\tobserved\tpossible\tpercent\n"
            "pear-09-excerpt\tall\t71\t77\t0.92\n"
            "pear-09-excerpt\tboundary\t13\t14\t0.93\n"
            "pear-09-excerpt\tnon_boundary\t58\t63\t0.92\n"
        )

    def test_json_full_precision(self, data):
        rc, out, _ = invoke("agree", "--json", *pear_args(data))
        assert rc == 0
        payload = json.loads(out)
        assert payload["narrative_id"] == "pear-09-excerpt"
        assert payload["threshold"] == 4
        assert payload["total"] == {
            "observed": 71,
            "possible": 77,
            "percent": 71 / 77,
        }
        assert payload["boundary"]["percent"] == 13 / 14

    def test_threshold_flag(self, data):
        rc, out, _ = invoke("agree", "--threshold", "1", *pear_args(data))
        assert rc == 0
        # With every marked site counted as a boundary, the boundary class
        # covers the six marked sites.
        assert "pear-09-excerpt\tboundary\t18\t42\t0.43" in out


class TestStrengths:
    def test_tsv(self, data):
        rc, out, _ = invoke("strengths", *pear_args(data))
        assert rc == 0
        lines = out.rstrip("\n").split("\n")
        assert lines[0] == "strength\tkind\tcount\tsites"
        assert len(lines) == 15
        assert "1\texact\t3\t4.3→5.1,5.1→6.1,8.2→8.3" in lines
        assert "2\texact\t1\t6.1→7.1" in lines
        assert "3\texact\t0\t-" in lines
        assert "4\tcumulative\t2\t3.3→4.1,8.4→9.1" in lines
        assert "7\texact\t1\t8.4→9.1" in lines

    def test_json(self, data):
        rc, out, _ = invoke("strengths", "--json", *pear_args(data))
        assert rc == 0
        payload = json.loads(out)
        assert payload["subjects"] == 7
        by_strength = {row["strength"]: row for row in payload["strengths"]}
        assert by_strength[6]["exact"]["sites"] == ["3.3→4.1"]
        assert by_strength[4]["cumulative"]["count"] == 2


class TestCochran:
    def test_tsv(self, data):
        rc, out, _ = invoke("cochran", *pear_args(data))
        assert rc == 0
        lines = out.rstrip("\n").split("\n")
        assert lines[0] == "statistic\tvalue"
        assert lines[1] == "q\t45.87"
        assert lines[2] == "df\t10"
        assert lines[3] == "p\t1.52e-06"
        assert lines[5] == "strength\tsites\tq\tdf\tp"
        rows = [line.split("\t") for line in lines[6:]]
        assert [r[:4] for r in rows] == [
            ["0", "5", "9.82", "5"],
            ["1", "3", "0.89", "3"],
            ["2", "1", "0.10", "1"],
            ["6", "1", "13.96", "1"],
            ["7", "1", "21.10", "1"],
        ]

    def test_component_df_flag(self, data):
        rc, out, _ = invoke(
            "cochran", "--component-df", "count-1", "--json", *pear_args(data)
        )
        assert rc == 0
        payload = json.loads(out)
        by_strength = {c["strength"]: c for c in payload["components"]}
        assert by_strength[0]["df"] == 4
        assert by_strength[7]["df"] == 0
        assert by_strength[7]["p"] is None

    def test_calibration_block(self, data):
        rc, out, _ = invoke(
            "cochran", "--calibrate", "1000", "--seed", "7", *pear_args(data)
        )
        assert rc == 0
        assert "# calibration trials=1000 seed=7" in out
        assert "level\tempirical_q\tchi_square_q" in out
        assert "rejection_rate_05\t" in out
        assert "empirical_p\t" in out

    def test_degenerate_exit_code(self, data):
        rc, out, err = invoke(
            "cochran",
            "--narrative", str(data / "three_link_tests_narrative.json"),
            "--annotations", str(data / "all_zero_annotations.json"),
        )
        assert rc == 3
        assert out == ""
        assert "degenerate: no boundary variance" in err


class TestSegment:
    def test_np_with_trace(self, data):
        rc, out, _ = invoke(
            "segment", "--method", "np", "--trace",
            "--narrative", str(data / "three_link_tests_narrative.json"),
            "--coding", str(data / "three_link_tests_coding.json"),
        )
        assert rc == 0
        assert out == (
            "site\tpair\n"
            "2\t3.1→4.1\n"
            "\n"
            "# clause_boundaries\n"
            "left\tright\n"
            "3\t4\n"
            "\n"
            "# trace\n"
            "fic\ttests\tlinked_by\tclause_referents\tinferable\tpronouns\tsegment\n"
            "2\tcoreference:pass\tcoreference\t1\t2\t1\t1\n"
            "3\tcoreference:fail,inference:pass\tinference\t2\t1\t-\t1,2\n"
            "4\tcoreference:fail,inference:fail,pronoun:fail\tboundary\t3\t-\t-\t3\n"
        )

    def test_np_json_trace(self, data):
        rc, out, _ = invoke(
            "segment", "--method", "np", "--trace", "--json",
            "--narrative", str(data / "three_link_tests_narrative.json"),
            "--coding", str(data / "three_link_tests_coding.json"),
        )
        assert rc == 0
        payload = json.loads(out)
        assert payload["sites"] == [2]
        assert payload["clause_boundaries"] == [[3, 4]]
        assert [step["linked_by"] for step in payload["trace"]] == [
            "coreference",
            "inference",
            None,
        ]
        assert payload["trace"][2]["tests"] == [
            ["coreference", False],
            ["inference", False],
            ["pronoun", False],
        ]

    def test_cue_default_lexicon(self, data):
        rc, out, _ = invoke(
            "segment", "--method", "cue",
            "--narrative", str(data / "pear9_excerpt_narrative.json"),
        )
        assert rc == 0
        assert out == "site\tpair\n1\t4.1→4.2\n10\t8.4→9.1\n"

    def test_cue_custom_lexicon(self, data):
        rc, out, _ = invoke(
            "segment", "--method", "cue",
            "--cues", str(data / "maybe_cues.txt"),
            "--narrative", str(data / "pear9_excerpt_narrative.json"),
        )
        assert rc == 0
        assert out == "site\tpair\n9\t8.3→8.4\n"

    def test_pause(self, data):
        rc, out, _ = invoke(
            "segment", "--method", "pause", "--json",
            "--narrative", str(data / "pear9_excerpt_narrative.json"),
        )
        assert rc == 0
        assert json.loads(out)["sites"] == [0, 1, 3, 5, 6, 9, 10]

    @pytest.mark.parametrize(
        "argv",
        [
            ("segment", "--method", "np", "--narrative", "N"),
            ("segment", "--method", "pause", "--narrative", "N", "--cues", "C"),
            ("segment", "--method", "cue", "--narrative", "N", "--coding", "C"),
            ("segment", "--method", "pause", "--narrative", "N", "--trace"),
        ],
    )
    def test_flag_combinations_rejected(self, data, argv):
        argv = [
            str(data / "pear9_excerpt_narrative.json") if a == "N"
            else str(data / "three_link_tests_coding.json") if a == "C"
            else a
            for a in argv
        ]
        rc, out, err = invoke(*argv)
        assert rc == 1
        assert out == ""
        assert err.startswith("error:")


class TestEval:
    def test_cue_row(self, data):
        rc, out, _ = invoke("eval", "--method", "cue", *pear_args(data))
        assert rc == 0
        assert out == (
            "narrative\tmethod\ttarget\tunit\ta\tb\tc\td"
            "\trecall\tprecision\tfallout\terror\n"
            "pear-09-excerpt\tcue\tthreshold=4\talgorithm\t1\t1\t1\t8"
            "\t0.50\t0.50\t0.11\t0.18\n"
        )

    def test_np_row(self, data):
        rc, out, _ = invoke(
            "eval", "--method", "np",
            "--coding", str(data / "three_link_tests_coding.json"),
            *link_args(data),
        )
        assert rc == 0
        assert (
            "synthetic-links\tnp\tthreshold=2\talgorithm\t1\t0\t0\t2"
            "\t1.00\t1.00\t0.00\t0.00" in out
        )

    def test_exact_target(self, data):
        rc, out, _ = invoke(
            "eval", "--method", "pause", "--exact", "1", *pear_args(data)
        )
        assert rc == 0
        assert (
            "pear-09-excerpt\tpause\texact=1\talgorithm\t1\t6\t2\t2"
            "\t0.33\t0.14\t0.75\t0.73" in out
        )

    def test_humans_rows_and_summary(self, data):
        rc, out, _ = invoke("eval", "--method", "humans", *pear_args(data))
        assert rc == 0
        lines = out.rstrip("\n").split("\n")
        assert len(lines) == 10
        assert lines[1].startswith(
            "pear-09-excerpt\thumans\tthreshold=4\ts1\t2\t0\t0\t9\t1.00\t1.00\t0.00\t0.00"
        )
        assert lines[7] == (
            "pear-09-excerpt\thumans\tthreshold=4\ts7\t1\t2\t1\t7"
            "\t0.50\t0.33\t0.22\t0.27"
        )
        assert lines[8] == (
            "pear-09-excerpt\thumans\tthreshold=4\tmean\t\t\t\t"
            "\t0.93\t0.76\t0.08\t0.08"
        )
        assert lines[9].startswith(
            "pear-09-excerpt\thumans\tthreshold=4\tvariance\t\t\t\t\t0.0306"
        )

    def test_humans_json_summary(self, data):
        rc, out, _ = invoke("eval", "--method", "humans", "--json", *pear_args(data))
        assert rc == 0
        payload = json.loads(out)
        assert payload["summary"]["recall"]["mean"] == 13 / 14
        assert payload["summary"]["recall"]["count"] == 7
        assert len(payload["subjects"]) == 7

    def test_leave_one_out(self, data):
        rc, out, _ = invoke(
            "eval", "--method", "humans", "--leave-one-out", "--json", *pear_args(data)
        )
        assert rc == 0
        assert json.loads(out)["target"].endswith("leave-one-out")

    def test_leave_one_out_needs_humans(self, data):
        rc, out, err = invoke(
            "eval", "--method", "cue", "--leave-one-out", *pear_args(data)
        )
        assert (rc, out) == (1, "")
        assert "leave-one-out" in err

    def test_threshold_exact_conflict_is_usage_error(self, data):
        rc, out, err = invoke(
            "eval", "--method", "cue", "--threshold", "4", "--exact", "2",
            *pear_args(data),
        )
        assert (rc, out) == (1, "")
        assert "usage:" in err


class TestReport:
    @pytest.fixture()
    def manifest(self, data, tmp_path):
        doc = {
            "items": [
                {
                    "narrative": str(data / "pear9_excerpt_narrative.json"),
                    "annotations": str(data / "pear9_excerpt_annotations.json"),
                },
                {
                    "narrative": "three_link_tests_narrative.json",
                    "annotations": "three_link_tests_annotations.json",
                    "coding": "three_link_tests_coding.json",
                },
            ]
        }
        for name in (
            "three_link_tests_narrative.json",
            "three_link_tests_annotations.json",
            "three_link_tests_coding.json",
        ):
            shutil.copy(data / name, tmp_path / name)
        path = tmp_path / "batch.json"
        path.write_text(json.dumps(doc))
        return path

    def test_tsv_blocks(self, manifest):
        rc, out, _ = invoke("report", "--batch", str(manifest))
        assert rc == 0
        blocks = out.split("\n\n")
        assert len(blocks) == 3
        assert blocks[0].startswith("# agreement")
        assert "# methods threshold=majority" in blocks[1]
        assert blocks[2].startswith("# strengths")

    def test_json_format(self, manifest):
        rc, out, _ = invoke("report", "--json", "--batch", str(manifest))
        assert rc == 0
        payload = json.loads(out)
        assert payload["agreement"]["summary"]["narratives"] == 2

    def test_manifest_format_and_cli_precedence(self, manifest):
        doc = json.loads(manifest.read_text())
        doc["format"] = "json"
        manifest.write_text(json.dumps(doc))
        rc, out, _ = invoke("report", "--batch", str(manifest))
        assert rc == 0
        json.loads(out)
        rc, out, _ = invoke("report", "--tsv", "--batch", str(manifest))
        assert rc == 0
        assert out.startswith("# agreement")

    def test_out_file(self, manifest, tmp_path):
        target = tmp_path / "report.tsv"
        rc, out, _ = invoke("report", "--batch", str(manifest), "--out", str(target))
        assert rc == 0
        assert out == ""
        direct = invoke("report", "--batch", str(manifest))[1]
        assert target.read_text() == direct

    def test_bad_manifest(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"items": []}))
        rc, out, err = invoke("report", "--batch", str(path))
        assert (rc, out) == (1, "")
        assert "items" in err


class TestExitCodes:
    def test_no_arguments(self):
        rc, out, err = invoke()
        assert (rc, out) == (1, "")
        assert err.startswith("usage:")

    def test_unknown_subcommand(self):
        rc, out, err = invoke("bogus")
        assert (rc, out) == (1, "")
        assert "usage:" in err

    def test_missing_file(self, data):
        rc, out, err = invoke(
            "agree",
            "--narrative", str(data / "does_not_exist.json"),
            "--annotations", str(data / "pear9_excerpt_annotations.json"),
        )
        assert (rc, out) == (2, "")
        assert "error:" in err

    def test_invalid_json_file(self, data):
        rc, out, err = invoke(
            "agree",
            "--narrative", str(data / "not_json.json"),
            "--annotations", str(data / "pear9_excerpt_annotations.json"),
        )
        assert (rc, out) == (1, "")

    def test_help(self):
        rc = run(["--help"], stdout=io.StringIO(), stderr=io.StringIO())
        assert rc == 0


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("agree",),
            ("agree", "--json"),
            ("strengths",),
            ("cochran",),
            ("cochran", "--json", "--calibrate", "1000", "--seed", "3"),
            ("eval", "--method", "humans"),
        ],
    )
    def test_repeat_runs_are_byte_identical(self, data, argv):
        first = invoke(*argv, *pear_args(data))
        second = invoke(*argv, *pear_args(data))
        assert first == second
        assert first[0] == 0
