"""Shared fixtures and the acceptance summary hook."""

from __future__ import annotations

import pytest

from segtool import fixture_path, load_annotations, load_fic_coding, load_narrative


@pytest.fixture(scope="session")
def pear9():
    narrative = load_narrative(fixture_path("pear9_excerpt_narrative.json"))
    matrix = load_annotations(fixture_path("pear9_excerpt_annotations.json"), narrative)
    return narrative, matrix


@pytest.fixture(scope="session")
def shared_phrase():
    narrative = load_narrative(fixture_path("shared_phrase_narrative.json"))
    coding = load_fic_coding(fixture_path("shared_phrase_coding.json"), narrative)
    return narrative, coding


@pytest.fixture(scope="session")
def three_link():
    narrative = load_narrative(fixture_path("three_link_tests_narrative.json"))
    coding = load_fic_coding(fixture_path("three_link_tests_coding.json"), narrative)
    return narrative, coding


@pytest.fixture(scope="session")
def bicycle():
    narrative = load_narrative(fixture_path("bicycle_wheels_narrative.json"))
    coding = load_fic_coding(fixture_path("bicycle_wheels_coding.json"), narrative)
    return narrative, coding


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    results = {}
    for status, passed in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if not passed:
                results[name] = False
            else:
                results.setdefault(name, True)
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(results):
            verdict = "PASS" if results[name] else "FAIL"
            terminalreporter.write_line(f"{name}: {verdict}")
