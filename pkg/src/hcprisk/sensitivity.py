"""Sensitivity of individual risk to transmission-probability levels and contact count.

Every sequence of ``n`` contacts whose probabilities are drawn from a
small set of levels is enumerated and its first-success risk computed.
Summaries over the (uniformly weighted) sequences give the mean and
spread of risk; sweeping a two-level set over a grid of low levels and
contact counts gives the mean/variance response surfaces.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetError, DomainError
from .individual import check_probability

ENUMERATION_BUDGET = 10**7
DEFAULT_OFFSET = 0.3


@dataclass(frozen=True)
class SequenceEnumeration:
    levels: tuple[float, ...]
    n: int
    risks: np.ndarray  # lexicographic code order, first contact most significant

    def codes(self) -> Iterator[str]:
        sep = "" if len(self.levels) <= 10 else "-"
        for combo in itertools.product(range(len(self.levels)), repeat=self.n):
            yield sep.join(str(i) for i in combo)

    def rows(self) -> Iterator[tuple[str, float]]:
        return zip(self.codes(), (float(r) for r in self.risks))

    @property
    def mean(self) -> float:
        return float(np.mean(self.risks))

    def sd(self, ddof: int = 1) -> float:
        """Standard deviation over sequences; ``ddof=1`` gives the sample SD."""
        if self.risks.size <= ddof:
            return 0.0
        return float(np.std(self.risks, ddof=ddof))

    def variance(self, ddof: int = 0) -> float:
        if self.risks.size <= ddof:
            return 0.0
        return float(np.var(self.risks, ddof=ddof))


def _survival_products(levels: Sequence[float], n: int) -> np.ndarray:
    """Prod of (1 - p) over each length-n sequence, in lexicographic order."""
    keep = 1.0 - np.asarray(levels, dtype=float)
    surv = np.ones(1)
    for _ in range(n):
        surv = np.multiply.outer(surv, keep).ravel()
    return surv


def enumerate_sequence_risks(
    levels: Sequence[float], n: int, budget: int = ENUMERATION_BUDGET
) -> SequenceEnumeration:
    """Risk of every length-``n`` sequence over the probability ``levels``.

    Level ``i`` is encoded as digit ``i``; sequence ``"011"`` means the
    first contact at level 0 followed by two at level 1.
    """
    levels = tuple(check_probability(p, "level probability") for p in levels)
    if not levels:
        raise DomainError("at least one probability level is required")
    if n < 1:
        raise DomainError(f"number of contacts must be >= 1, got {n}")
    count = len(levels) ** n
    if count > budget:
        raise BudgetError(
            f"{len(levels)}^{n} = {count} sequences exceeds the enumeration budget of {budget}"
        )
    risks = 1.0 - _survival_products(levels, n)
    return SequenceEnumeration(levels, n, risks)


@dataclass(frozen=True)
class SurfacePoint:
    p_low: float
    n_contacts: int
    mean: float
    variance: float


def response_surface(
    p_low_grid: Iterable[float],
    n_grid: Iterable[int],
    offset: float = DEFAULT_OFFSET,
    budget: int = ENUMERATION_BUDGET,
) -> list[SurfacePoint]:
    """Mean and population variance of risk over all two-level sequences.

    The two levels are ``p_low`` and ``p_low + offset``.
    """
    p_lows = [check_probability(p, "p_low") for p in p_low_grid]
    ns = list(n_grid)
    for p in p_lows:
        if p + offset > 1.0 + 1e-12:
            raise DomainError(f"p_low + offset = {p + offset:.6g} exceeds 1")
    points = []
    for p in p_lows:
        for n in ns:
            e = enumerate_sequence_risks((p, min(p + offset, 1.0)), n, budget)
            points.append(SurfacePoint(p, n, e.mean, e.variance(ddof=0)))
    points.sort(key=lambda pt: (pt.p_low, pt.n_contacts))
    return points


def default_p_low_grid() -> list[float]:
    return [round(0.01 * i, 2) for i in range(1, 51)]


def default_n_grid() -> list[int]:
    return list(range(1, 13))


def _fmt(x: float) -> str:
    return format(x, ".12g")


def surface_export(points: Sequence[SurfacePoint], out=None) -> str:
    """Write ``p_low,n,mean,variance`` rows (12 significant digits) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p_low", "n", "mean", "variance"])
    for pt in sorted(points, key=lambda pt: (pt.p_low, pt.n_contacts)):
        w.writerow([_fmt(pt.p_low), pt.n_contacts, _fmt(pt.mean), _fmt(pt.variance)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def surface_import(text: str) -> list[SurfacePoint]:
    reader = csv.DictReader(io.StringIO(text))
    return [
        SurfacePoint(float(r["p_low"]), int(r["n"]), float(r["mean"]), float(r["variance"]))
        for r in reader
    ]
