"""Access to the small corpora shipped with the package.

The annotation rows here are a reconstruction: they reproduce published
per-site totals for the excerpt, not any original subject's record.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURE_NAMES = (
    "pear9_excerpt_narrative.json",
    "pear9_excerpt_annotations.json",
    "bicycle_wheels_narrative.json",
    "bicycle_wheels_coding.json",
    "shared_phrase_narrative.json",
    "shared_phrase_coding.json",
    "three_link_tests_narrative.json",
    "three_link_tests_coding.json",
)


def fixture_path(name: str) -> Path:
    """Filesystem path of a shipped fixture by file name."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")
    return Path(str(resources.files("segtool").joinpath(f"fixtures/{name}")))
