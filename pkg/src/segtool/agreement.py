"""Agreement among annotators: majority opinion, percent agreement, strengths.

Percent agreement follows the pooled-opinion scheme: each site's majority
label (boundary when at least ceil((i+1)/2) of i subjects marked it) is the
reference, and every subject's judgement at every site counts as one
agreement opportunity. Ratios are kept as exact fractions; callers format
them as they see fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .corpus import AnnotationMatrix, BoundarySet
from .errors import ValidationError


def majority_threshold(subjects: int) -> int:
    """Smallest count that constitutes a strict majority (4 of 7)."""
    if subjects < 1:
        raise ValidationError("subject count must be positive")
    return (subjects + 2) // 2


@dataclass(frozen=True)
class MajorityOpinion:
    """Per-site boundary/non-boundary classification at a given threshold."""

    narrative_id: str
    threshold: int
    site_count: int
    boundary_sites: frozenset[int]

    def is_boundary(self, site: int) -> bool:
        return site in self.boundary_sites

    def boundaries(self) -> BoundarySet:
        return BoundarySet(self.narrative_id, self.boundary_sites)


def majority_opinion(
    matrix: AnnotationMatrix, threshold: int | None = None
) -> MajorityOpinion:
    """Classify each site by how many subjects marked it.

    threshold defaults to the strict majority of the panel. Any threshold in
    [1, subjects] is accepted so cumulative agreement pools can be formed.
    """
    if threshold is None:
        threshold = majority_threshold(matrix.subjects)
    if not 1 <= threshold <= matrix.subjects:
        raise ValidationError(
            f"threshold {threshold} outside [1, {matrix.subjects}]"
        )
    marked = np.flatnonzero(matrix.column_totals >= threshold)
    return MajorityOpinion(
        narrative_id=matrix.narrative_id,
        threshold=threshold,
        site_count=matrix.sites,
        boundary_sites=frozenset(int(k) for k in marked),
    )


@dataclass(frozen=True)
class AgreementReport:
    """Observed vs possible agreements with the majority, per site class.

    Class percents are None when the class is empty (no boundary sites, or
    none left over), never 0.
    """

    narrative_id: str
    subjects: int
    sites: int
    threshold: int
    observed: int
    possible: int
    observed_boundary: int
    possible_boundary: int
    observed_non_boundary: int
    possible_non_boundary: int

    @property
    def percent(self) -> Fraction:
        return Fraction(self.observed, self.possible)

    @property
    def percent_boundary(self) -> Fraction | None:
        if self.possible_boundary == 0:
            return None
        return Fraction(self.observed_boundary, self.possible_boundary)

    @property
    def percent_non_boundary(self) -> Fraction | None:
        if self.possible_non_boundary == 0:
            return None
        return Fraction(self.observed_non_boundary, self.possible_non_boundary)

    @property
    def boundary_site_count(self) -> int:
        return self.possible_boundary // self.subjects

    @property
    def non_boundary_site_count(self) -> int:
        return self.possible_non_boundary // self.subjects


def percent_agreement(
    matrix: AnnotationMatrix, threshold: int | None = None
) -> AgreementReport:
    """Score every subject's judgement at every site against the majority."""
    opinion = majority_opinion(matrix, threshold)
    i, j = matrix.subjects, matrix.sites
    totals = matrix.column_totals
    boundary = np.zeros(j, dtype=bool)
    boundary[sorted(opinion.boundary_sites)] = True

    # At a boundary site the agreeing judgements are the 1-cells, at a
    # non-boundary site the 0-cells.
    observed_b = int(totals[boundary].sum())
    observed_nb = int((i - totals[~boundary]).sum())
    possible_b = i * int(boundary.sum())
    possible_nb = i * int((~boundary).sum())
    return AgreementReport(
        narrative_id=matrix.narrative_id,
        subjects=i,
        sites=j,
        threshold=opinion.threshold,
        observed=observed_b + observed_nb,
        possible=possible_b + possible_nb,
        observed_boundary=observed_b,
        possible_boundary=possible_b,
        observed_non_boundary=observed_nb,
        possible_non_boundary=possible_nb,
    )


class BoundaryStrengths:
    """Sites grouped by how many subjects marked them.

    exact(t) holds the sites marked by exactly t subjects; cumulative(t)
    those marked by at least t. cumulative at the majority threshold is the
    conventional reference pool for evaluation.
    """

    def __init__(self, matrix: AnnotationMatrix):
        self.narrative_id = matrix.narrative_id
        self.subjects = matrix.subjects
        totals = matrix.column_totals
        self._exact = {
            t: frozenset(int(k) for k in np.flatnonzero(totals == t))
            for t in range(1, matrix.subjects + 1)
        }
        self._cumulative = {
            t: frozenset(int(k) for k in np.flatnonzero(totals >= t))
            for t in range(1, matrix.subjects + 1)
        }

    def _check(self, strength: int) -> None:
        if not 1 <= strength <= self.subjects:
            raise ValidationError(
                f"strength {strength} outside [1, {self.subjects}]"
            )

    def exact(self, strength: int) -> BoundarySet:
        self._check(strength)
        return BoundarySet(self.narrative_id, self._exact[strength])

    def cumulative(self, strength: int) -> BoundarySet:
        self._check(strength)
        return BoundarySet(self.narrative_id, self._cumulative[strength])

    def validated(self) -> BoundarySet:
        """Sites marked by a strict majority of the panel."""
        return self.cumulative(majority_threshold(self.subjects))


def boundary_strengths(matrix: AnnotationMatrix) -> BoundaryStrengths:
    return BoundaryStrengths(matrix)
