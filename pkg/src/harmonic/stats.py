"""Two-group statistics: Fisher's exact test, Mann-Whitney U, Cohen's h."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import fisher_exact as _scipy_fisher

EXACT_LIMIT = 12  # total sample size up to which Mann-Whitney p is exact


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 counts: rows are conditions, columns are (outcome, no outcome)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_counts(cls, k1: int, n1: int, k2: int, n2: int) -> "ContingencyTable":
        if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
            raise ValueError("successes must lie in [0, n]")
        return cls(k1, n1 - k1, k2, n2 - k2)

    @property
    def rows(self) -> tuple[int, int]:
        return self.a + self.b, self.c + self.d

    def as_list(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]


def fisher_exact(table: ContingencyTable) -> float:
    """Two-sided p: total probability of tables no more probable than the observed one."""
    if sum(table.rows) == 0:
        return 1.0
    _, p = _scipy_fisher(table.as_list(), alternative="two-sided")
    return min(1.0, max(0.0, float(p)))


def midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """U statistic of ``a`` and the two-sided p-value.

    Exact (enumerating every assignment of the pooled midranks to the first
    group) when the total size is at most ``EXACT_LIMIT``; otherwise the
    normal approximation with tie correction and continuity correction.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    ranks = midranks(list(a) + list(b))
    offset = n1 * (n1 + 1) / 2
    u = sum(ranks[:n1]) - offset
    mu = n1 * n2 / 2
    observed = abs(u - mu)
    n = n1 + n2
    if n <= EXACT_LIMIT:
        hits = total = 0
        for combo in itertools.combinations(ranks, n1):
            total += 1
            if abs(sum(combo) - offset - mu) >= observed - 1e-9:
                hits += 1
        return u, hits / total
    counts: dict[float, int] = {}
    for v in list(a) + list(b):
        counts[v] = counts.get(v, 0) + 1
    ties = sum(t**3 - t for t in counts.values())
    var = n1 * n2 / 12 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    z = max(0.0, observed - 0.5) / math.sqrt(var)
    return u, min(1.0, math.erfc(z / math.sqrt(2)))


def cohens_h(p1: float, p2: float) -> float:
    """h = 2 asin(sqrt(p2)) - 2 asin(sqrt(p1))."""
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"proportion {p} outside [0, 1]")
    return 2 * math.asin(math.sqrt(p2)) - 2 * math.asin(math.sqrt(p1))
