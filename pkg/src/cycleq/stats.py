"""Histograms, distances and chi-square tests for comparing shot samples.

The chi-square survival function is computed from the regularized upper
incomplete gamma function: a power series when ``x < a + 1`` and a
Lentz continued fraction otherwise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

ALPHA = 0.001
MIN_EXPECTED = 5.0

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


class StatsError(ValueError):
    pass


class EmptyHistogramError(StatsError):
    pass


class InsufficientCellsError(StatsError):
    pass


@dataclass(frozen=True)
class Histogram:
    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise StatsError("negative count")
        if sum(self.counts.values()) != self.total:
            raise StatsError(f"counts sum to {sum(self.counts.values())}, total says {self.total}")

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "Histogram":
        c = {k: int(v) for k, v in sorted(counts.items())}
        return cls(c, sum(c.values()))

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[str]) -> "Histogram":
        c: dict[str, int] = {}
        for o in outcomes:
            c[o] = c.get(o, 0) + 1
        return cls.from_counts(c)

    def frequency(self, key: str) -> float:
        if self.total == 0:
            raise EmptyHistogramError("empty histogram")
        return self.counts.get(key, 0) / self.total

    def frequencies(self) -> dict[str, float]:
        return {k: self.frequency(k) for k in self.counts}

    @property
    def support(self) -> set[str]:
        return {k for k, v in self.counts.items() if v > 0}


@dataclass(frozen=True)
class GofReport:
    statistic: float
    p_value: float
    dof: int
    alpha: float = ALPHA

    @property
    def verdict(self) -> str:
        return "pass" if self.p_value > self.alpha else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


# incomplete gamma ------------------------------------------------------------


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"series for P({a}, {x}) did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction (modified Lentz)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"continued fraction for Q({a}, {x}) did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a: float, x: float) -> float:
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def gammainc_upper(a: float, x: float) -> float:
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_sf(statistic: float, dof: int) -> float:
    """P(X >= statistic) for X ~ chi-square with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if statistic <= 0:
        return 1.0
    return min(1.0, max(0.0, gammainc_upper(dof / 2.0, statistic / 2.0)))


# tests -------------------------------------------------------------------------


def total_variation(h: Histogram, p: Mapping[str, float]) -> float:
    """Half the L1 distance between empirical frequencies and ``p``."""
    if h.total == 0:
        raise EmptyHistogramError("empty histogram")
    keys = set(h.counts) | set(p)
    return 0.5 * math.fsum(abs(h.frequency(k) - p.get(k, 0.0)) for k in keys)


def total_variation_empirical(a: Histogram, b: Histogram) -> float:
    if a.total == 0 or b.total == 0:
        raise EmptyHistogramError("empty histogram")
    keys = set(a.counts) | set(b.counts)
    return 0.5 * math.fsum(abs(a.frequency(k) - b.frequency(k)) for k in keys)


def pool_cells(cells: list[tuple[float, list[float]]], min_expected: float = MIN_EXPECTED) -> list[tuple[float, list[float]]]:
    """Merge cells whose expected count is below ``min_expected``.

    Each cell is ``(expected, observed_values)``. Small cells are lumped
    together; if the lump is still small it joins the smallest retained
    cell. Totals are preserved.
    """
    big = [c for c in cells if c[0] >= min_expected]
    small = [c for c in cells if c[0] < min_expected]
    if not small:
        return big
    width = len(small[0][1])
    lump = (math.fsum(c[0] for c in small), [math.fsum(c[1][j] for c in small) for j in range(width)])
    if lump[0] >= min_expected or not big:
        return big + [lump]
    j = min(range(len(big)), key=lambda i: big[i][0])
    e, o = big[j]
    big[j] = (e + lump[0], [o[t] + lump[1][t] for t in range(width)])
    return big


def chi_square_gof(h: Histogram, p: Mapping[str, float], alpha: float = ALPHA) -> GofReport:
    """Pearson goodness of fit of ``h`` against the law ``p``.

    Counts landing where ``p`` is zero make the statistic infinite.
    """
    if h.total == 0:
        raise EmptyHistogramError("empty histogram")
    n = h.total
    if any(h.counts.get(k, 0) > 0 and p.get(k, 0.0) <= 0.0 for k in h.counts):
        cells = sum(1 for v in p.values() if v > 0)
        return GofReport(math.inf, 0.0, max(cells - 1, 1), alpha)
    cells = [(n * prob, [float(h.counts.get(k, 0))]) for k, prob in sorted(p.items()) if prob > 0]
    pooled = pool_cells(cells)
    if len(pooled) < 2:
        raise InsufficientCellsError("fewer than 2 cells after pooling")
    stat = math.fsum((o[0] - e) ** 2 / e for e, o in pooled)
    dof = len(pooled) - 1
    return GofReport(stat, chi2_sf(stat, dof), dof, alpha)


def two_sample_chi_square(a: Histogram, b: Histogram, alpha: float = ALPHA) -> GofReport:
    """Chi-square test of homogeneity for two histograms (2 x k contingency table)."""
    if a.total == 0 or b.total == 0:
        raise EmptyHistogramError("empty histogram")
    keys = sorted(set(a.counts) | set(b.counts))
    na, nb = a.total, b.total
    n = na + nb
    cells = []
    for k in keys:
        col = a.counts.get(k, 0) + b.counts.get(k, 0)
        if col == 0:
            continue
        # pool on the smaller of the two expected counts
        cells.append((col * min(na, nb) / n, [float(a.counts.get(k, 0)), float(b.counts.get(k, 0))]))
    pooled = pool_cells(cells)
    if len(pooled) < 2:
        raise InsufficientCellsError("fewer than 2 cells after pooling")
    stat = 0.0
    for _, (oa, ob) in pooled:
        col = oa + ob
        ea, eb = col * na / n, col * nb / n
        stat += (oa - ea) ** 2 / ea + (ob - eb) ** 2 / eb
    dof = len(pooled) - 1
    return GofReport(stat, chi2_sf(stat, dof), dof, alpha)
