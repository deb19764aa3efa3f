"""Cochran's Q over annotation matrices, with a self-contained chi-square tail.

The test statistic for an i x j binary matrix with row totals u and column
totals T is

    Q = j * (j - 1) * sum_k (T_k - mean(T))^2 / (j * sum(u) - sum(u^2)),

referred to chi-square with j - 1 degrees of freedom. The numerator splits
by agreement strength: columns marked by exactly t subjects contribute one
additive component each, so the components sum to Q and can be tested
separately.

The chi-square survival function is computed here from the regularized
incomplete gamma function (series below a + 1, continued fraction above)
rather than taken from a stats library, so the toolkit's p-values do not
depend on one. Cochran (1950, Biometrika 37) is the source of the test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import AnnotationMatrix
from .errors import DegenerateDataError, ValidationError

_EPS = 1e-14
_MAX_ITER = 10**6

DEGENERATE_MESSAGE = "degenerate: no boundary variance"


# ---------------------------------------------------------------------------
# Chi-square tail


class _NoConvergence(ArithmeticError):
    pass


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise _NoConvergence(f"gamma series did not converge for a={a}, x={x}")


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a + 1).

    Modified Lentz evaluation of the standard continued fraction.
    """
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for n in range(1, _MAX_ITER):
        an = -n * (n - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise _NoConvergence(f"gamma continued fraction did not converge for a={a}, x={x}")


def _check_chi_args(x: float, df: int) -> None:
    if not isinstance(df, int) or isinstance(df, bool) or df < 1:
        raise ValidationError(f"degrees of freedom must be a positive integer, got {df!r}")
    if not math.isfinite(x) or x < 0:
        raise ValidationError(f"chi-square statistic must be finite and non-negative, got {x!r}")


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability P(X >= x) for chi-square with df degrees of freedom.

    Parameters
    ----------
    x : float
        Observed statistic, >= 0.
    df : int
        Degrees of freedom, >= 1.

    Returns
    -------
    float
        The survival function value, in [0, 1]. chi_square_sf(0, df) is
        exactly 1.
    """
    x = float(x)
    _check_chi_args(x, df)
    if x == 0.0:
        return 1.0
    a = df / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, half)))


def chi_square_cdf(x: float, df: int) -> float:
    """Lower-tail companion of chi_square_sf."""
    x = float(x)
    _check_chi_args(x, df)
    if x == 0.0:
        return 0.0
    a = df / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return min(1.0, max(0.0, _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, 1.0 - _upper_gamma_cf(a, half)))


def chi_square_critical(tail: float, df: int, tol: float = 1e-12) -> float:
    """The x with chi_square_sf(x, df) == tail, found by bisection."""
    if not 0.0 < tail < 1.0:
        raise ValidationError(f"tail probability must be in (0, 1), got {tail!r}")
    _check_chi_args(0.0, df)
    lo, hi = 0.0, max(df * 4.0, 16.0)
    while chi_square_sf(hi, df) > tail:
        hi *= 2.0
        if hi > 1e12:
            raise ValidationError(f"no chi-square quantile found for tail {tail}")
    while hi - lo > tol * max(1.0, hi):
        mid = (lo + hi) / 2.0
        if chi_square_sf(mid, df) > tail:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Cochran's Q


@dataclass(frozen=True)
class QComponent:
    """Additive share of Q contributed by columns of one agreement strength."""

    strength: int
    site_count: int
    q: float
    df: int
    p: float | None


@dataclass(frozen=True)
class CochranResult:
    q: float
    df: int
    p: float
    components: dict[int, QComponent]


def _integer_terms(matrix: AnnotationMatrix) -> tuple[int, int, int]:
    """(sites, total marks, denominator) with the denominator in integers.

    denominator = j * sum(u) - sum(u^2) = sum_i u_i * (j - u_i), which is 0
    exactly when every row is empty or full.
    """
    j = matrix.sites
    total = int(matrix.row_totals.sum())
    denom = j * total - int((matrix.row_totals.astype(np.int64) ** 2).sum())
    return j, total, denom


def partition_q(
    matrix: AnnotationMatrix, component_df: str = "count"
) -> dict[int, QComponent]:
    """Split Q into per-strength components.

    Columns marked by exactly t subjects (t = 0 included) share the squared
    deviation (t - mean(T))^2, so strength t contributes

        q_t = j * (j - 1) * n_t * (t - mean(T))^2 / denominator

    and sum_t q_t = Q exactly. Each component is referred to chi-square with
    df equal to the number of such columns (component_df="count", the
    default) or that number minus one (component_df="count-1"); components
    left with zero degrees of freedom get p = None.
    """
    if component_df not in ("count", "count-1"):
        raise ValidationError(f"component_df must be 'count' or 'count-1', got {component_df!r}")
    j, total, denom = _integer_terms(matrix)
    if j < 2:
        raise ValidationError("Q needs at least 2 sites")
    if denom == 0:
        raise DegenerateDataError(DEGENERATE_MESSAGE)
    counts = np.bincount(matrix.column_totals, minlength=matrix.subjects + 1)
    components: dict[int, QComponent] = {}
    for t in range(matrix.subjects + 1):
        n_t = int(counts[t])
        if n_t == 0:
            continue
        # (t - total/j)^2 scaled to integers: (j*t - total)^2 / j^2, then
        # multiplied by j*(j-1)*n_t and divided by denom.
        numerator = (j - 1) * n_t * (j * t - total) ** 2
        q_t = numerator / (j * denom)
        df_t = n_t if component_df == "count" else n_t - 1
        p_t = chi_square_sf(q_t, df_t) if df_t >= 1 else None
        components[t] = QComponent(strength=t, site_count=n_t, q=q_t, df=df_t, p=p_t)
    return components


def cochran_q(
    matrix: AnnotationMatrix, component_df: str = "count"
) -> CochranResult:
    """Cochran's Q test of whether subjects mark sites at equal rates.

    Parameters
    ----------
    matrix : AnnotationMatrix
        Binary subjects x sites judgements, at least 2 sites.
    component_df : str
        Degrees-of-freedom rule for the per-strength components, see
        partition_q.

    Returns
    -------
    CochranResult
        Statistic, j - 1 degrees of freedom, upper-tail p, and the
        per-strength partition.

    Raises
    ------
    DegenerateDataError
        When every row is all zeros or all ones, so the statistic's
        denominator vanishes.
    """
    j, total, denom = _integer_terms(matrix)
    if j < 2:
        raise ValidationError("Q needs at least 2 sites")
    if denom == 0:
        raise DegenerateDataError(DEGENERATE_MESSAGE)
    deviation_sq = sum(
        (j * int(t_k) - total) ** 2 for t_k in matrix.column_totals
    )
    q = (j - 1) * deviation_sq / (j * denom)
    df = j - 1
    return CochranResult(
        q=q,
        df=df,
        p=chi_square_sf(q, df),
        components=partition_q(matrix, component_df),
    )


# ---------------------------------------------------------------------------
# Monte-Carlo calibration of the null


@dataclass(frozen=True)
class CalibrationResult:
    """Null distribution of Q estimated by simulation.

    Each trial keeps the observed row totals and scatters every subject's
    marks uniformly at random over the sites, independently per subject.
    quantiles maps probability levels to empirical Q quantiles;
    reference_quantiles holds the chi-square(df) quantiles at the same
    levels for comparison. rejection_rate_05 is the fraction of trials at
    or above the chi-square 5% critical value, so a well-calibrated null
    puts it near 0.05. All distribution fields are None when the row totals
    admit no variance (then every trial is degenerate).
    """

    row_totals: tuple[int, ...]
    sites: int
    trials: int
    seed: int
    df: int
    degenerate_trials: int
    quantiles: dict[float, float] | None
    reference_quantiles: dict[float, float] | None
    rejection_rate_05: float | None
    observed_q: float | None = None
    empirical_p: float | None = None


_QUANTILE_LEVELS = (0.5, 0.9, 0.95, 0.99)


def null_calibration(
    row_totals,
    sites: int,
    trials: int,
    seed: int,
    observed_q: float | None = None,
) -> CalibrationResult:
    """Simulate Q under row-preserving random placement of boundary marks.

    Trial streams derive from (seed, trial index), so results are
    reproducible for a given seed and trials could be generated in any
    order. The empirical p for an observed Q uses the add-one rule
    (1 + exceedances) / (trials + 1).
    """
    u = tuple(int(x) for x in row_totals)
    if not u:
        raise ValidationError("row totals must be non-empty")
    if not isinstance(sites, int) or isinstance(sites, bool) or sites < 2:
        raise ValidationError("sites must be an integer >= 2")
    for x in u:
        if not 0 <= x <= sites:
            raise ValidationError(f"row total {x} outside [0, {sites}]")
    if trials < 1000:
        raise ValidationError("at least 1000 trials are required")
    if observed_q is not None and (not math.isfinite(observed_q) or observed_q < 0):
        raise ValidationError("observed_q must be finite and non-negative")

    j = sites
    df = j - 1
    total = sum(u)
    denom = j * total - sum(x * x for x in u)
    if denom == 0:
        # Every simulated matrix would be degenerate too; report that
        # instead of fabricating a distribution.
        return CalibrationResult(
            row_totals=u,
            sites=j,
            trials=trials,
            seed=seed,
            df=df,
            degenerate_trials=trials,
            quantiles=None,
            reference_quantiles=None,
            rejection_rate_05=None,
            observed_q=observed_q,
            empirical_p=None,
        )

    stats = np.empty(trials, dtype=np.float64)
    scale = (j - 1) / (j * denom)
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        columns = np.zeros(j, dtype=np.int64)
        for u_i in u:
            if u_i:
                columns[rng.choice(j, size=u_i, replace=False)] += 1
        deviation_sq = int(((j * columns - total) ** 2).sum())
        stats[trial] = scale * deviation_sq

    critical_05 = chi_square_critical(0.05, df)
    quantiles = {
        level: float(np.quantile(stats, level)) for level in _QUANTILE_LEVELS
    }
    reference = {
        level: chi_square_critical(1.0 - level, df) for level in _QUANTILE_LEVELS
    }
    empirical_p = None
    if observed_q is not None:
        empirical_p = (1 + int((stats >= observed_q).sum())) / (trials + 1)
    return CalibrationResult(
        row_totals=u,
        sites=j,
        trials=trials,
        seed=seed,
        df=df,
        degenerate_trials=0,
        quantiles=quantiles,
        reference_quantiles=reference,
        rejection_rate_05=float((stats >= critical_05).mean()),
        observed_q=observed_q,
        empirical_p=empirical_p,
    )
