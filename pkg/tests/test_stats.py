from __future__ import annotations

import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from harmonic.stats import ContingencyTable, cohens_h, fisher_exact, mann_whitney_u, midranks


def fisher_oracle(a: int, b: int, c: int, d: int) -> float:
    # enumerate every table with the observed margins
    r1, r2, c1 = a + b, c + d, a + c
    n = r1 + r2
    denom = math.comb(n, c1)
    prob = lambda x: math.comb(r1, x) * math.comb(r2, c1 - x) / denom
    observed = prob(a)
    lo, hi = max(0, c1 - r2), min(r1, c1)
    return min(1.0, sum(prob(x) for x in range(lo, hi + 1) if prob(x) <= observed * (1 + 1e-7)))


def u_pairwise(a, b) -> float:
    return sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)


def mwu_oracle(a, b) -> float:
    # permutation distribution of the pairwise U over every split of the pooled sample
    pooled = list(a) + list(b)
    n1 = len(a)
    mu = len(a) * len(b) / 2
    observed = abs(u_pairwise(a, b) - mu)
    hits = total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        chosen = set(idx)
        ga = [pooled[i] for i in idx]
        gb = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        total += 1
        hits += abs(u_pairwise(ga, gb) - mu) >= observed - 1e-9
    return hits / total


def test_fisher_matches_enumeration_on_all_small_tables():
    for n in range(0, 17):
        for a, b, c in itertools.product(range(n + 1), repeat=3):
            d = n - a - b - c
            if d < 0:
                continue
            got = fisher_exact(ContingencyTable(a, b, c, d))
            want = 1.0 if n == 0 else fisher_oracle(a, b, c, d)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12), (a, b, c, d)


@pytest.mark.parametrize("n1", range(1, 7))
@pytest.mark.parametrize("n2", range(1, 7))
def test_mann_whitney_exact_matches_permutation_enumeration(n1, n2):
    rng = random.Random(n1 * 10 + n2)
    for _ in range(8):
        a = [rng.randint(0, 4) for _ in range(n1)]
        b = [rng.randint(0, 4) for _ in range(n2)]
        u, p = mann_whitney_u(a, b)
        assert u == pytest.approx(u_pairwise(a, b))
        assert p == pytest.approx(mwu_oracle(a, b), abs=1e-12)


@given(
    st.lists(st.integers(0, 5), min_size=1, max_size=6),
    st.lists(st.integers(0, 5), min_size=1, max_size=6),
)
def test_mann_whitney_property(a, b):
    u, p = mann_whitney_u(a, b)
    assert u == pytest.approx(u_pairwise(a, b))
    assert p == pytest.approx(mwu_oracle(a, b), abs=1e-12)
    u2, p2 = mann_whitney_u(b, a)
    assert u + u2 == pytest.approx(len(a) * len(b))
    assert p == pytest.approx(p2)


def test_mann_whitney_large_samples_use_normal_approximation():
    a, b = list(range(20)), list(range(10, 30))
    u, p = mann_whitney_u(a, b)
    assert u == pytest.approx(u_pairwise(a, b))
    assert 0.0 < p < 0.05
    assert mann_whitney_u([1] * 10, [1] * 10)[1] == 1.0


def test_mann_whitney_requires_data():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


def test_midranks_average_ties():
    assert midranks([3, 1, 3, 2]) == [3.5, 1.0, 3.5, 2.0]


@given(st.floats(0, 1), st.floats(0, 1))
def test_cohens_h_antisymmetric(p1, p2):
    assert cohens_h(p1, p2) == pytest.approx(-cohens_h(p2, p1), abs=1e-12)


def test_cohens_h_extremes():
    assert cohens_h(0, 1) == pytest.approx(math.pi, abs=1e-12)
    assert cohens_h(0.3, 0.3) == 0.0
    with pytest.raises(ValueError):
        cohens_h(-0.1, 0.5)


def test_table_validation():
    with pytest.raises(ValueError):
        ContingencyTable.from_counts(5, 4, 0, 1)
    with pytest.raises(ValueError):
        ContingencyTable(-1, 0, 0, 0)


# reconstructed counts from the comparison table, n = 30 per condition
def test_reconstructed_table_p_values():
    f = lambda k1, k2: fisher_exact(ContingencyTable.from_counts(k1, 30, k2, 30))
    assert f(30, 18) < 0.001
    assert f(2, 21) < 0.001
    assert f(17, 28) == pytest.approx(0.002, abs=0.001)
    assert f(14, 25) == pytest.approx(0.006, abs=0.002)
    assert f(13, 2) == pytest.approx(0.002, abs=0.001)


def test_reconstructed_effect_sizes():
    assert cohens_h(2 / 30, 21 / 30) == pytest.approx(1.46, abs=0.01)
    assert cohens_h(17 / 30, 28 / 30) == pytest.approx(0.92, abs=0.01)
    # the formula gives 1.37 for 100% vs 60%; the printed table shows 1.31
    assert abs(cohens_h(1.0, 0.6)) == pytest.approx(1.369, abs=0.001)
