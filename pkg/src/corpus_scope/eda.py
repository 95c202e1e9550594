"""Exploratory statistics: yearly counts, quadratic trend, shares, top terms."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
from scipy import stats

from .errors import (
    DegenerateDesignError,
    EmptyCorpusError,
    ExtrapolationError,
    InsufficientDataError,
)

if TYPE_CHECKING:  # pragma: no cover - type hints only
    from .corpus_ingest import Corpus, DocType
    from .text_pipeline import SparseDTM, Vocabulary

EXTRAPOLATION_MARGIN = 10


@dataclass(frozen=True)
class YearSeries:
    """(year, count) points sorted by year, plus how many docs had no year.

    Years absent from the corpus are absent here too; zero is never invented.
    """

    points: tuple[tuple[int, int], ...]
    missing_year_count: int = 0

    def __post_init__(self):
        years = [y for y, _ in self.points]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("year series must be strictly increasing in year")

    def years(self) -> tuple[int, ...]:
        return tuple(y for y, _ in self.points)

    def counts(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.points)

    def total(self) -> int:
        return sum(self.counts())


def counts_per_year(corpus: "Corpus") -> YearSeries:
    """Tally documents per publication year.

    Documents without a year are excluded from the points but reported in
    ``missing_year_count``. Raises EmptyCorpusError for an empty corpus or
    one where every document lacks a year.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot count years of an empty corpus")
    tally: Counter[int] = Counter()
    missing = 0
    for doc in corpus:
        if doc.year is None:
            missing += 1
        else:
            tally[doc.year] += 1
    if not tally:
        raise EmptyCorpusError("no document has a year")
    points = tuple(sorted(tally.items()))
    return YearSeries(points=points, missing_year_count=missing)


class XEncoding(enum.Enum):
    RAW_YEAR = "raw_year"
    CENTERED_YEAR = "centered_year"


@dataclass(frozen=True)
class QuadraticFit:
    """Least-squares quadratic y = a2*x^2 + a1*x + a0 with fit diagnostics.

    Attributes
    ----------
    a2, a1, a0 : float
        Coefficients in the ``x_encoding`` coordinates.
    r_squared : float
        Coefficient of determination, clamped to [0, 1].
    p_value : float
        Overall F-test p-value on (2, n-3) degrees of freedom.
    x_encoding : XEncoding
        RAW_YEAR means x is the calendar year itself; CENTERED_YEAR means
        x = year - x_mean.
    degenerate : bool
        True when the response had zero variance (R^2 reported as 1.0 by
        convention and the p-value as 1.0).
    x_min, x_max : int
        Fitted year range, used to guard forecasts.
    x_mean : float
        Mean fitted year (the centering offset).
    """

    a2: float
    a1: float
    a0: float
    r_squared: float
    p_value: float
    x_encoding: XEncoding
    degenerate: bool
    x_min: int
    x_max: int
    x_mean: float


def fit_quadratic(series: YearSeries) -> QuadraticFit:
    """Fit a quadratic trend to (year, count) points by least squares.

    The solve runs on centered years for conditioning and the coefficients
    are then expanded to raw-year form, so ``x_encoding`` is RAW_YEAR.

    Raises
    ------
    InsufficientDataError
        Fewer than 4 points (no residual degree of freedom for the F test).
    DegenerateDesignError
        Fewer than 3 distinct years (singular normal equations).
    """
    n = len(series.points)
    if n < 4:
        raise InsufficientDataError(f"need at least 4 points, got {n}")
    x = np.asarray(series.years(), dtype=np.float64)
    y = np.asarray(series.counts(), dtype=np.float64)
    if len(np.unique(x)) < 3:
        raise DegenerateDesignError("fewer than 3 distinct x values")

    m = float(x.mean())
    xc = x - m
    design = np.column_stack([xc * xc, xc, np.ones_like(xc)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    b2, b1, b0 = (float(c) for c in coef)

    fitted = design @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))

    if ss_tot == 0.0:
        r2, p_value, degenerate = 1.0, 1.0, True
    else:
        degenerate = False
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
        if ss_res <= 0.0:
            p_value = 0.0
        else:
            f_stat = ((ss_tot - ss_res) / 2.0) / (ss_res / (n - 3))
            p_value = float(stats.f.sf(f_stat, 2, n - 3))

    # expand b2*(x-m)^2 + b1*(x-m) + b0 to raw-year coefficients
    a2 = b2
    a1 = b1 - 2.0 * b2 * m
    a0 = b2 * m * m - b1 * m + b0
    return QuadraticFit(
        a2=a2,
        a1=a1,
        a0=a0,
        r_squared=r2,
        p_value=p_value,
        x_encoding=XEncoding.RAW_YEAR,
        degenerate=degenerate,
        x_min=int(x.min()),
        x_max=int(x.max()),
        x_mean=m,
    )


def _evaluate(fit: QuadraticFit, year: int) -> float:
    x = float(year)
    if fit.x_encoding is XEncoding.CENTERED_YEAR:
        x -= fit.x_mean
    return (fit.a2 * x + fit.a1) * x + fit.a0


def forecast(fit: QuadraticFit, year: int, allow_extrapolation: bool = False) -> float:
    """Evaluate the fitted curve at ``year``, clamping negative values to 0.

    Years more than 10 beyond the fitted range raise ExtrapolationError
    unless ``allow_extrapolation`` is set.
    """
    value, _ = forecast_point(fit, year, allow_extrapolation)
    return value


def forecast_point(
    fit: QuadraticFit, year: int, allow_extrapolation: bool = False
) -> tuple[float, bool]:
    """Like :func:`forecast` but also reports whether clamping occurred."""
    lo = fit.x_min - EXTRAPOLATION_MARGIN
    hi = fit.x_max + EXTRAPOLATION_MARGIN
    if not allow_extrapolation and not lo <= year <= hi:
        raise ExtrapolationError(
            f"year {year} outside trusted window [{lo}, {hi}]; "
            "pass allow_extrapolation=True to override"
        )
    raw = _evaluate(fit, year)
    return (raw, False) if raw >= 0.0 else (0.0, True)


def top_terms(
    dtm: "SparseDTM", vocab: "Vocabulary", k: int
) -> list[tuple[str, int, float]]:
    """Rank terms by corpus frequency.

    Returns (term, count, cumulative_share) triples where cumulative_share is
    the running fraction of all counted tokens, so the k-th entry answers
    "what share of the corpus do the top k terms absorb". Ties break
    lexicographically. ``k`` exceeding the vocabulary just returns everything.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    totals = dtm.col_totals
    order = sorted(range(len(dtm.terms)), key=lambda j: (-int(totals[j]), dtm.terms[j]))
    out: list[tuple[str, int, float]] = []
    running = 0
    grand = dtm.n_total
    for j in order[:k]:
        running += int(totals[j])
        share = running / grand if grand else 0.0
        out.append((dtm.terms[j], int(totals[j]), share))
    return out


def type_shares(corpus: "Corpus") -> dict["DocType", int]:
    """Integer percentage of documents per publication type.

    Uses the largest-remainder method so the values sum to exactly 100.
    Only types present in the corpus appear. Remainder ties break toward the
    larger count, then alphabetical type name, which keeps the result
    independent of dict ordering.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot compute type shares of an empty corpus")
    tally = Counter(doc.doc_type for doc in corpus)
    n = sum(tally.values())
    exact = {t: Fraction(100 * c, n) for t, c in tally.items()}
    floors = {t: int(v) for t, v in exact.items()}  # Fraction.__int__ floors
    leftover = 100 - sum(floors.values())
    by_remainder = sorted(
        tally,
        key=lambda t: (-(exact[t] - floors[t]), -tally[t], t.value),
    )
    shares = dict(floors)
    for t in by_remainder[:leftover]:
        shares[t] += 1
    return {t: shares[t] for t in sorted(shares, key=lambda t: (-shares[t], t.value))}
