"""Rank tests and correlation comparisons.

Mann-Whitney U and the Jonckheere trend statistic follow the classic
formulation: midranks for ties, the tie-corrected (MWU) or no-ties
(Jonckheere) normal variance for the reported z. For small samples the
p-values come from the exact permutation distribution instead of the normal
curve - the MWU path evaluates the subset-sum distribution of midrank sums,
the Jonckheere path convolves the pairwise Mann-Whitney count distributions
(valid when the pooled values are tie-free). Larger samples, and tied
Jonckheere samples, use the normal approximation with a continuity
correction inside the p-values; the z reported is always the plain
(statistic - mean)/sd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from ..errors import DomainError

__all__ = [
    "TestResult",
    "mwu_z",
    "jonckheere",
    "pearson_r",
    "fisher_rz_diff",
    "coeff_diff_z",
    "classify_free_rider",
]

EXACT_LIMIT = 25  # largest pooled size for which the exact distribution is evaluated


@dataclass(frozen=True)
class TestResult:
    statistic: float
    z: float
    p_one_tailed: float
    p_two_tailed: float
    sample_sizes: tuple[int, ...]
    method: str


def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and pooled[order[j]] == pooled[order[i]]:
            j += 1
        mid = (i + j + 1) / 2.0  # average of ranks i+1 .. j
        for idx in order[i:j]:
            ranks[idx] = mid
        i = j
    return ranks


def _subset_sum_counts(items: list[int], pick: int) -> list[list[int]]:
    """counts[k][s] = number of k-subsets of items with element sum s."""
    total = sum(items)
    counts = [[0] * (total + 1) for _ in range(pick + 1)]
    counts[0][0] = 1
    for item in items:
        for k in range(min(pick, len(items)) - 1, -1, -1):
            row = counts[k]
            nxt = counts[k + 1]
            for s in range(total - item, -1, -1):
                c = row[s]
                if c:
                    nxt[s + item] += c
    return counts


def mwu_z(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    method: str = "auto",
) -> TestResult:
    """Two-sample Mann-Whitney test; positive z means sample_b tends larger.

    The statistic is U counted in favor of sample_b (ties half). method is
    "auto" (exact when the pooled size allows, else normal), "exact", or
    "normal".
    """
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if not a or not b:
        raise DomainError("both samples must be nonempty")
    if method not in ("auto", "exact", "normal"):
        raise DomainError(f"unknown method {method!r}")
    m, n = len(a), len(b)
    N = m + n
    pooled = a + b
    ranks = _midranks(pooled)
    rank_sum_b = sum(ranks[m:])
    u = rank_sum_b - n * (n + 1) / 2.0

    mean = m * n / 2.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for v in pooled:
        seen[v] = seen.get(v, 0) + 1
    for t in seen.values():
        tie_term += t**3 - t
    variance = (m * n / (N * (N - 1))) * ((N**3 - N) / 12.0 - tie_term / 12.0)
    sd = math.sqrt(variance) if variance > 0 else 0.0
    z = (u - mean) / sd if sd > 0 else 0.0

    use_exact = method == "exact" or (method == "auto" and N <= EXACT_LIMIT)
    if use_exact:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _subset_sum_counts(doubled, n)[n]
        # doubled U for a subset with doubled-rank sum s is s - n(n+1)
        u2 = int(round(2 * u))
        offset = n * (n + 1)
        total = math.comb(N, n)
        ge = sum(c for s, c in enumerate(counts) if s - offset >= u2)
        le = sum(c for s, c in enumerate(counts) if s - offset <= u2)
        p_one = ge / total
        p_two = min(1.0, 2.0 * min(ge, le) / total)
        label = "exact"
    else:
        if sd > 0:
            p_one = float(norm.sf((u - 0.5 - mean) / sd))
            p_low = float(norm.cdf((u + 0.5 - mean) / sd))
            p_two = min(1.0, 2.0 * min(p_one, p_low))
        else:
            p_one, p_two = 0.5, 1.0
        label = "normal"
    return TestResult(
        statistic=u, z=z, p_one_tailed=p_one, p_two_tailed=p_two,
        sample_sizes=(m, n), method=label,
    )


def _mw_count_polynomial(m: int, n: int) -> list[int]:
    """Coefficients of the Mann-Whitney count distribution for sizes (m, n).

    poly[u] counts the interleavings of m 'a's and n 'b's with exactly u of
    the m*n cross pairs ordered (a before b counts when b is larger); these
    are the Gaussian binomial coefficients of [m+n choose n], built with the
    recurrence P(i, j) = P(i-1, j) + q^i * P(i, j-1).
    """
    col = [[1] for _ in range(m + 1)]  # j = 0: one arrangement, u = 0
    for j in range(1, n + 1):
        new_col: list[list[int]] = [[1]]  # P(0, j) = 1
        for i in range(1, m + 1):
            left = new_col[i - 1]
            up = col[i]
            out = [0] * (i * j + 1)
            for u, c in enumerate(left):
                out[u] += c
            for u, c in enumerate(up):
                out[u + i] += c
            new_col.append(out)
        col = new_col
    return col[m]


def jonckheere(samples: Sequence[Sequence[float]], method: str = "auto") -> TestResult:
    """Trend test for k ordered groups; one-tailed for the increasing alternative.

    J sums, over ordered group pairs, the count of cross pairs where the
    later group's value is larger (ties half). Exact p-values require
    tie-free pooled data (the convolution decomposition of J); ties always
    fall back to the normal approximation, which is the documented
    half-count convention.
    """
    groups = [[float(v) for v in s] for s in samples]
    if len(groups) < 2 or any(not g for g in groups):
        raise DomainError("need >= 2 nonempty ordered groups")
    if method not in ("auto", "exact", "normal"):
        raise DomainError(f"unknown method {method!r}")
    sizes = [len(g) for g in groups]
    N = sum(sizes)
    j_stat = 0.0
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            for x in groups[i]:
                for yv in groups[j]:
                    if x < yv:
                        j_stat += 1.0
                    elif x == yv:
                        j_stat += 0.5
    mean = (N * N - sum(s * s for s in sizes)) / 4.0
    variance = (
        N * N * (2 * N + 3) - sum(s * s * (2 * s + 3) for s in sizes)
    ) / 72.0
    sd = math.sqrt(variance) if variance > 0 else 0.0
    z = (j_stat - mean) / sd if sd > 0 else 0.0

    pooled = [v for g in groups for v in g]
    tie_free = len(set(pooled)) == len(pooled)
    use_exact = method == "exact" or (method == "auto" and tie_free and N <= EXACT_LIMIT)
    if use_exact:
        if not tie_free:
            raise DomainError("exact Jonckheere p-values require tie-free data")
        # J is the sum of independent Mann-Whitney counts U(m_i, n_i) with
        # m_i the number of observations in the groups before group i.
        dist = [1]
        before = sizes[0]
        for size in sizes[1:]:
            part = _mw_count_polynomial(before, size)
            out = [0] * (len(dist) + len(part) - 1)
            for u1, c1 in enumerate(dist):
                if c1:
                    for u2, c2 in enumerate(part):
                        out[u1 + u2] += c1 * c2
            dist = out
            before += size
        total = sum(dist)
        j_int = int(round(j_stat))
        ge = sum(c for u, c in enumerate(dist) if u >= j_int)
        le = sum(c for u, c in enumerate(dist) if u <= j_int)
        p_one = ge / total
        p_two = min(1.0, 2.0 * min(ge, le) / total)
        label = "exact"
    else:
        if sd > 0:
            p_one = float(norm.sf((j_stat - 0.5 - mean) / sd))
            p_low = float(norm.cdf((j_stat + 0.5 - mean) / sd))
            p_two = min(1.0, 2.0 * min(p_one, p_low))
        else:
            p_one, p_two = 0.5, 1.0
        label = "normal"
    return TestResult(
        statistic=j_stat, z=z, p_one_tailed=p_one, p_two_tailed=p_two,
        sample_sizes=tuple(sizes), method=label,
    )


def pearson_r(x: Sequence[float], y: Sequence[float]) -> tuple[float, int]:
    """Sample Pearson correlation and n. Constant series yield (nan, n)."""
    xs = np.asarray(x, float)
    ys = np.asarray(y, float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DomainError("x and y must be equal-length 1-d series")
    n = xs.size
    if n < 3:
        raise DomainError(f"correlation needs n >= 3, got {n}")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        return float("nan"), n
    return float((dx * dy).sum() / (sx * sy)), n


def fisher_rz_diff(r1: float, n1: int, r2: float, n2: int) -> float:
    """z for the difference of two independent correlations (atanh transform)."""
    for r, n in ((r1, n1), (r2, n2)):
        if not abs(r) < 1.0:
            raise DomainError(f"|r| must be < 1, got {r}")
        if n < 4:
            raise DomainError(f"each sample needs n >= 4, got {n}")
    return (math.atanh(r1) - math.atanh(r2)) / math.sqrt(
        1.0 / (n1 - 3) + 1.0 / (n2 - 3)
    )


def coeff_diff_z(b1: float, se1: float, b2: float, se2: float) -> TestResult:
    """z for the difference of two independently estimated coefficients.

    z = (b1 - b2) / sqrt(se1^2 + se2^2), the conservative independent-sample
    form; two-tailed p from the standard normal.
    """
    if se1 <= 0 or se2 <= 0:
        raise DomainError(f"standard errors must be positive, got {se1}, {se2}")
    z = (b1 - b2) / math.hypot(se1, se2)
    return TestResult(
        statistic=z, z=z,
        p_one_tailed=float(norm.sf(z)),
        p_two_tailed=float(2.0 * norm.sf(abs(z))),
        sample_sizes=(), method="normal",
    )


def classify_free_rider(contribution: float, endowment: int = 100) -> bool:
    """True iff the contribution is below a third of the endowment.

    With integer tokens at e=100 this is exactly "33 or less"; the integer
    arithmetic avoids any 1/3 rounding ambiguity.
    """
    if not 0 <= contribution <= endowment:
        raise DomainError(
            f"contribution {contribution} outside [0, {endowment}]"
        )
    if float(contribution).is_integer():
        return 3 * int(contribution) < endowment
    return 3.0 * float(contribution) < float(endowment)
