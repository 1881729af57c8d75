from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from vcmlab import (
    DomainError,
    classify_free_rider,
    coeff_diff_z,
    fisher_rz_diff,
    jonckheere,
    mwu_z,
    pearson_r,
)


def u_by_pair_counting(a, b):
    """U in favor of b, counted pair by pair (ties half)."""
    return sum(
        (1.0 if bj > ai else 0.5 if bj == ai else 0.0) for ai in a for bj in b
    )


def mwu_oracle(a, b):
    """Exact tail probabilities by enumerating every split of the pooled
    values into positions; a completely separate route from the rank-sum
    subset DP used by the implementation."""
    pooled = list(a) + list(b)
    m, n = len(a), len(b)
    u_obs = u_by_pair_counting(a, b)
    ge = le = total = 0
    for comb in itertools.combinations(range(m + n), n):
        chosen = set(comb)
        bvals = [pooled[i] for i in comb]
        avals = [pooled[i] for i in range(m + n) if i not in chosen]
        u = u_by_pair_counting(avals, bvals)
        total += 1
        ge += u >= u_obs - 1e-9
        le += u <= u_obs + 1e-9
    return ge / total, le / total, total


def jonckheere_oracle(groups):
    """Exact upper-tail probability of J by enumerating every assignment of
    the pooled values to the group slots (tie-free data only)."""
    sizes = [len(g) for g in groups]
    pooled = [v for g in groups for v in g]
    assert len(set(pooled)) == len(pooled), "oracle needs tie-free data"

    def j_of(split):
        total = 0
        for i in range(len(split)):
            for j in range(i + 1, len(split)):
                total += sum(x < y for x in split[i] for y in split[j])
        return total

    j_obs = j_of(groups)
    ge = total = 0
    indices = list(range(len(pooled)))

    def recurse(remaining, built):
        nonlocal ge, total
        if len(built) == len(sizes):
            split = [[pooled[i] for i in block] for block in built]
            total += 1
            ge += j_of(split) >= j_obs
            return
        size = sizes[len(built)]
        # fix the smallest remaining index into this block to kill
        # permutation double-counting only across identical block contents;
        # blocks are distinguishable so plain combinations are correct
        for comb in itertools.combinations(remaining, size):
            rest = [i for i in remaining if i not in set(comb)]
            recurse(rest, built + [comb])

    recurse(indices, [])
    return ge / total, total


class TestMannWhitney:
    def test_textbook_example(self):
        res = mwu_z([1, 2, 3, 4], [5, 6, 7, 8])
        assert res.statistic == 16.0
        assert res.method == "exact"
        assert res.p_one_tailed == pytest.approx(1 / 70)
        assert res.p_two_tailed == pytest.approx(2 / 70)

    @pytest.mark.parametrize("m,n", [(2, 2), (3, 3), (2, 5), (4, 4), (3, 5), (5, 5)])
    def test_exact_tail_matches_enumeration(self, m, n):
        rng = np.random.default_rng(m * 10 + n)
        for _ in range(3):
            a = list(rng.integers(0, 4, m))   # small support forces ties
            b = list(rng.integers(0, 4, n))
            res = mwu_z(a, b, method="exact")
            ge, le, total = mwu_oracle(a, b)
            assert res.p_one_tailed == pytest.approx(ge, abs=1e-12)
            assert res.p_two_tailed == pytest.approx(min(1.0, 2 * min(ge, le)), abs=1e-12)

    def test_exact_tail_matches_enumeration_continuous(self):
        rng = np.random.default_rng(0)
        a = list(rng.normal(size=5))
        b = list(rng.normal(loc=1.0, size=5))
        res = mwu_z(a, b, method="exact")
        ge, _, _ = mwu_oracle(a, b)
        assert res.p_one_tailed == pytest.approx(ge, abs=1e-12)

    def test_antisymmetry(self):
        a, b = [3, 1, 4, 1, 5], [9, 2, 6, 5, 3]
        ab = mwu_z(a, b)
        ba = mwu_z(b, a)
        assert ab.z == pytest.approx(-ba.z)
        assert ab.statistic + ba.statistic == len(a) * len(b)
        assert ab.p_two_tailed == pytest.approx(ba.p_two_tailed)

    def test_identical_samples(self):
        res = mwu_z([5, 5, 5], [5, 5, 5])
        assert res.z == 0.0
        assert res.p_two_tailed == 1.0

    def test_direction_convention(self):
        # sample_b larger -> positive z, small upper-tail p
        res = mwu_z([1, 2, 3], [10, 11, 12])
        assert res.z > 0
        assert res.p_one_tailed < 0.06
        res_rev = mwu_z([10, 11, 12], [1, 2, 3])
        assert res_rev.z < 0
        assert res_rev.p_one_tailed > 0.9

    def test_normal_approximation_agrees_for_moderate_samples(self):
        rng = np.random.default_rng(8)
        a = list(rng.integers(0, 101, 12))
        b = list(rng.integers(10, 111, 12))
        exact = mwu_z(a, b, method="exact")
        approx = mwu_z(a, b, method="normal")
        assert exact.statistic == approx.statistic
        assert exact.z == approx.z
        assert approx.p_two_tailed == pytest.approx(exact.p_two_tailed, abs=0.02)

    def test_large_samples_fall_back_to_normal(self):
        a = list(range(20))
        b = list(range(10, 30))
        res = mwu_z(a, b)
        assert res.method == "normal"

    def test_empty_sample_rejected(self):
        with pytest.raises(DomainError):
            mwu_z([], [1, 2])
        with pytest.raises(DomainError):
            mwu_z([1], [2], method="bogus")


class TestJonckheere:
    def test_textbook_example(self):
        res = jonckheere([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert res.statistic == 27.0
        assert res.method == "exact"
        assert res.p_one_tailed == pytest.approx(1 / 1680)

    @pytest.mark.parametrize("sizes", [(2, 2, 2), (3, 2, 3), (3, 3, 4), (2, 2, 2, 2)])
    def test_exact_tail_matches_enumeration(self, sizes):
        rng = np.random.default_rng(sum(sizes))
        for _ in range(2):
            pooled = rng.permutation(np.arange(1, sum(sizes) + 1) * 1.0)
            groups, start = [], 0
            for s in sizes:
                groups.append(list(pooled[start:start + s]))
                start += s
            res = jonckheere(groups, method="exact")
            ge, total = jonckheere_oracle(groups)
            assert res.p_one_tailed == pytest.approx(ge, abs=1e-12), (
                f"sizes={sizes} groups={groups}"
            )

    def test_two_groups_reduce_to_mann_whitney(self):
        a, b = [1.5, 9.0, 3.25], [7.0, 2.5, 8.0, 11.0]
        jt = jonckheere([a, b], method="exact")
        mw = mwu_z(a, b, method="exact")
        assert jt.statistic == mw.statistic
        assert jt.p_one_tailed == pytest.approx(mw.p_one_tailed)

    def test_ties_use_normal_path(self):
        res = jonckheere([[1, 1, 2], [2, 3, 3], [4, 4, 5]])
        assert res.method == "normal"
        with pytest.raises(DomainError):
            jonckheere([[1, 1, 2], [2, 3, 3]], method="exact")

    def test_all_equal_groups(self):
        res = jonckheere([[7, 7], [7, 7], [7, 7]])
        assert res.z == 0.0
        assert res.sample_sizes == (2, 2, 2)
        assert res.statistic == 6.0  # all 12 cross pairs tied, half each

    def test_monotone_groups_maximize_j(self):
        res = jonckheere([[1, 2], [3, 4], [5, 6]])
        assert res.statistic == 12.0  # every cross pair ordered
        assert res.z > 0

    def test_decreasing_trend_gives_negative_z(self):
        res = jonckheere([[9, 8], [6, 5], [2, 1]])
        assert res.z < 0
        assert res.p_one_tailed > 0.9


class TestPearson:
    def test_hand_computed_small_series(self):
        # x=(1,2,3), y=(2,4,7): r = 5 / sqrt(2 * 38/3)
        r, n = pearson_r([1, 2, 3], [2, 4, 7])
        assert n == 3
        assert r == pytest.approx(5 / math.sqrt(2 * (38 / 3)))
        assert r == pytest.approx(0.9933992678, abs=1e-9)

    def test_perfect_lines(self):
        xs = [3.0, 1.0, 4.0, 1.5, 5.0]
        assert pearson_r(xs, [2 * v + 1 for v in xs])[0] == pytest.approx(1.0)
        assert pearson_r(xs, [-0.5 * v for v in xs])[0] == pytest.approx(-1.0)

    def test_constant_series_yields_nan(self):
        r, n = pearson_r([4, 4, 4, 4], [1, 2, 3, 4])
        assert math.isnan(r)
        assert n == 4

    def test_too_short(self):
        with pytest.raises(DomainError):
            pearson_r([1, 2], [3, 4])


class TestFisherRToZ:
    def test_matches_direct_formula(self):
        z = fisher_rz_diff(0.5, 100, 0.3, 80)
        direct = (math.atanh(0.5) - math.atanh(0.3)) / math.sqrt(1 / 97 + 1 / 77)
        assert z == pytest.approx(direct)

    def test_antisymmetry_and_zero(self):
        assert fisher_rz_diff(0.4, 50, 0.4, 50) == 0.0
        assert fisher_rz_diff(0.1, 40, 0.6, 60) == pytest.approx(
            -fisher_rz_diff(0.6, 60, 0.1, 40)
        )

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DomainError):
            fisher_rz_diff(1.0, 50, 0.2, 50)
        with pytest.raises(DomainError):
            fisher_rz_diff(0.5, 3, 0.2, 50)


class TestCoefficientDifference:
    def test_independent_difference_form(self):
        res = coeff_diff_z(-11.56, 4.38, -32.67, 7.49)
        assert res.z == pytest.approx(21.11 / math.hypot(4.38, 7.49))
        assert res.z == pytest.approx(2.43, abs=0.01)
        assert res.p_two_tailed == pytest.approx(0.015, abs=0.002)

    def test_antisymmetry(self):
        assert coeff_diff_z(1.0, 0.5, 2.0, 0.5).z == pytest.approx(
            -coeff_diff_z(2.0, 0.5, 1.0, 0.5).z
        )

    def test_zero_difference(self):
        res = coeff_diff_z(0.7, 0.1, 0.7, 0.2)
        assert res.z == 0.0
        assert res.p_two_tailed == 1.0

    def test_bad_se(self):
        with pytest.raises(DomainError):
            coeff_diff_z(1.0, 0.0, 2.0, 1.0)


class TestFreeRiderRule:
    def test_boundary(self):
        assert classify_free_rider(33)
        assert not classify_free_rider(34)
        assert classify_free_rider(0)
        assert not classify_free_rider(100)

    def test_scales_with_endowment(self):
        assert classify_free_rider(19, endowment=60)
        assert not classify_free_rider(20, endowment=60)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            classify_free_rider(-1)
        with pytest.raises(DomainError):
            classify_free_rider(101)
