"""Nonparametric tests: worked examples, brute-force oracles, properties."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glean.stats import (
    AttributeRow,
    AttributeTable,
    DegenerateDataError,
    GroupConfig,
    Method,
    group_correlations,
    kruskal_wallis,
    mann_whitney,
    rank_with_ties,
    spearman,
)


class TestRankWithTies:
    def test_strict_order(self):
        assert rank_with_ties([10, 20, 30]) == [1, 2, 3]

    def test_average_rank_rule(self):
        assert rank_with_ties([10, 20, 20, 30]) == [1, 2.5, 2.5, 4]

    def test_full_tie(self):
        n = 7
        assert rank_with_ties([3.5] * n) == [(n + 1) / 2] * n

    def test_unsorted_input(self):
        assert rank_with_ties([30, 10, 20]) == [3, 1, 2]

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            rank_with_ties([1.0, float("nan")])
        with pytest.raises(ValueError):
            rank_with_ties([])


def _perm_p_two_sided(x, y, formula="ranks"):
    # independent enumeration oracle over all |y|! orderings
    rx = np.array(rank_with_ties(x))
    ry = np.array(rank_with_ties(y))

    def rho(a, b):
        if formula == "difference":
            n = len(a)
            d = a - b
            return 1 - 6 * float(d @ d) / (n * (n * n - 1))
        aa = a - a.mean()
        bb = b - b.mean()
        return float(aa @ bb) / math.sqrt(float(aa @ aa) * float(bb @ bb))

    observed = rho(rx, ry)
    hits = 0
    total = 0
    for perm in itertools.permutations(ry):
        total += 1
        if abs(rho(rx, np.array(perm))) >= abs(observed) - 1e-12:
            hits += 1
    return hits / total


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]).statistic == pytest.approx(1.0)

    def test_perfect_antitone(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]).statistic == pytest.approx(-1.0)

    def test_middle_swap_is_point_eight(self):
        # hand Pearson-of-ranks: d = (0, 1, -1, 0), rho = 1 - 6*2/60 = 0.8
        res = spearman([1, 2, 3, 4], [1, 3, 2, 4])
        assert res.statistic == pytest.approx(0.8)
        assert res.method is Method.T_APPROX

    def test_exact_perm_matches_enumeration_oracle(self):
        res = spearman([1, 2, 3, 4], [1, 3, 2, 4], method=Method.EXACT_PERM)
        assert res.p_value == pytest.approx(_perm_p_two_sided([1, 2, 3, 4], [1, 3, 2, 4]))
        # 8 of the 24 orderings reach |rho| >= 0.8
        assert res.p_value == pytest.approx(8 / 24)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        assert spearman(x, y).statistic == pytest.approx(spearman(y, x).statistic)

    @given(st.permutations(list(range(8))))
    @settings(max_examples=30, deadline=None)
    def test_monotone_transform_invariance(self, perm):
        x = list(range(8))
        y = [float(v) for v in perm]
        base = spearman(x, y)
        warped = spearman([math.exp(v) for v in x], [v**3 + 2 * v for v in y])
        assert warped.statistic == pytest.approx(base.statistic)
        assert warped.p_value == pytest.approx(base.p_value)

    def test_zero_variance_raises(self):
        with pytest.raises(DegenerateDataError):
            spearman([1, 1, 1, 1], [1, 2, 3, 4])

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [2, 1])

    def test_difference_formula_equals_ranks_when_tie_free(self):
        rng = np.random.default_rng(11)
        x = rng.permutation(10).astype(float)
        y = rng.permutation(10).astype(float)
        a = spearman(x, y, formula="ranks").statistic
        b = spearman(x, y, formula="difference").statistic
        assert a == pytest.approx(b, abs=1e-12)

    def test_one_sided_halves_the_matching_tail(self):
        x = [1, 2, 3, 4, 5, 6]
        y = [2, 1, 4, 3, 6, 5]
        two = spearman(x, y).p_value
        greater = spearman(x, y, alternative="greater").p_value
        less = spearman(x, y, alternative="less").p_value
        assert greater == pytest.approx(two / 2)
        assert less == pytest.approx(1 - two / 2)


class TestKruskalWallis:
    def test_three_group_fixture(self):
        # mean ranks 2, 5, 8 -> H = 7.2 by hand; df=2 so p = exp(-3.6)
        res = kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert res.statistic == pytest.approx(7.2)
        assert res.p_value == pytest.approx(math.exp(-3.6), abs=1e-12)
        assert res.effect_size == pytest.approx((7.2 - 3 + 1) / (9 - 3))

    def test_identical_groups_give_zero(self):
        res = kruskal_wallis([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
        assert res.statistic == pytest.approx(0.0, abs=1e-12)

    def test_all_values_identical_is_degenerate(self):
        with pytest.raises(DegenerateDataError):
            kruskal_wallis([[5, 5], [5, 5, 5]])

    def test_monotone_transform_invariance(self):
        groups = [[1.0, 4.0, 2.5], [3.0, 8.0], [0.5, 9.0, 7.0]]
        warped = [[math.atan(v) for v in g] for g in groups]
        assert kruskal_wallis(groups).statistic == pytest.approx(
            kruskal_wallis(warped).statistic
        )

    def test_preconditions(self):
        with pytest.raises(ValueError):
            kruskal_wallis([[1, 2, 3]])
        with pytest.raises(ValueError):
            kruskal_wallis([[1, 2], []])
        with pytest.raises(ValueError):
            kruskal_wallis([[1], [2]])

    def test_exact_perm_close_to_chi2(self):
        # the chi-squared approximation is coarser than the t / normal ones,
        # so this is a sanity band rather than the 0.02 agreement the
        # two-sample tests meet
        rng = np.random.default_rng(5)
        groups = [list(rng.normal(size=12)) for _ in range(3)]
        approx = kruskal_wallis(groups)
        perm = kruskal_wallis(groups, method=Method.EXACT_PERM, n_resamples=20_000)
        assert abs(approx.p_value - perm.p_value) < 0.05


def _mw_bruteforce_u(a, b):
    wins = sum(1.0 for x in a for y in b if x > y)
    ties = sum(1.0 for x in a for y in b if x == y)
    u_a = wins + ties / 2.0
    return min(u_a, len(a) * len(b) - u_a)


class TestMannWhitney:
    def test_complete_separation(self):
        assert mann_whitney([1, 2], [3, 4]).statistic == 0.0

    def test_identical_multisets(self):
        res = mann_whitney([1, 2, 3], [1, 2, 3])
        assert res.statistic == 3 * 3 / 2.0

    def test_interleaved_example(self):
        # pair counting: a-beats-b pairs = {(3,2)} so U_a = 1, U = min(1, 3)
        res = mann_whitney([1, 3], [2, 4])
        assert res.statistic == 1.0
        assert res.statistic == _mw_bruteforce_u([1, 3], [2, 4])

    def test_rank_sum_equals_pair_counting(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            n_a = int(rng.integers(1, 9))
            n_b = int(rng.integers(1, 9))
            a = rng.integers(0, 6, n_a).astype(float)
            b = rng.integers(0, 6, n_b).astype(float)
            assert mann_whitney(a, b).statistic == pytest.approx(
                _mw_bruteforce_u(list(a), list(b))
            )

    def test_exact_perm_enumerates_small_samples(self):
        a = [1.0, 4.0, 2.0]
        b = [3.0, 5.0]
        res = mann_whitney(a, b, method=Method.EXACT_PERM)
        # enumerate C(5,3)=10 assignments by hand oracle
        pooled = a + b
        u_obs = _mw_bruteforce_u(a, b)
        hits = 0
        for pick in itertools.combinations(range(5), 3):
            ga = [pooled[i] for i in pick]
            gb = [pooled[i] for i in range(5) if i not in pick]
            if _mw_bruteforce_u(ga, gb) <= u_obs + 1e-12:
                hits += 1
        assert res.p_value == pytest.approx(hits / 10)

    def test_all_ties_p_is_one(self):
        assert mann_whitney([2, 2], [2, 2, 2]).p_value == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney([], [1.0])


class TestApproxVsPermutation:
    def test_spearman_agreement_n20(self):
        rng = np.random.default_rng(21)
        for _ in range(4):
            x = rng.normal(size=20)
            y = 0.4 * x + rng.normal(size=20)
            approx = spearman(x, y)
            perm = spearman(x, y, method=Method.EXACT_PERM, n_resamples=20_000, seed=1)
            assert abs(approx.p_value - perm.p_value) < 0.02

    def test_mann_whitney_agreement_n20(self):
        rng = np.random.default_rng(22)
        for _ in range(4):
            a = rng.normal(size=10)
            b = rng.normal(loc=0.5, size=10)
            approx = mann_whitney(a, b)
            exact = mann_whitney(a, b, method=Method.EXACT_PERM)
            assert exact.method is Method.EXACT_PERM
            assert abs(approx.p_value - exact.p_value) < 0.02


def _table(rows, groups=None):
    config = GroupConfig(
        groups=groups
        or {
            "criminal": tuple(f"p{i}" for i in range(6)),
            "other": tuple(f"p{i}" for i in range(6, 12)),
        }
    )
    return AttributeTable(rows=tuple(rows), config=config)


def _row(prompt, monk, group, gender="Man"):
    return AttributeRow(
        prompt=prompt, predicted_gender=gender, monk_rank=monk,
        happy=0.0, sad=0.0, angry=0.0, group=group,
    )


class TestGroupCorrelations:
    def test_extreme_table_is_significant(self):
        # the six criminal prompts hold the six highest Monk ranks
        rows = [_row(f"p{i}", 9 - (i // 2), "criminal") for i in range(6)]
        rows += [_row(f"p{i}", 2 + (i % 2), "other") for i in range(6, 12)]
        table = _table(rows)
        results = dict(
            group_correlations(table, method=Method.EXACT_PERM, n_resamples=20_000)
        )
        crim = results["criminal"]
        assert crim.statistic > 0
        assert crim.p_value < 0.01

    def test_constant_indicator_raises(self):
        rows = [_row(f"p{i}", 3 + i % 5, "only") for i in range(6)]
        table = _table(rows, groups={"only": tuple(f"p{i}" for i in range(6))})
        with pytest.raises(DegenerateDataError):
            group_correlations(table)

    def test_absent_group_raises(self):
        rows = [_row(f"p{i}", 3 + i % 5, "criminal") for i in range(6)]
        rows += [_row(f"p{i}", 4, "other") for i in range(6, 12)]
        table = _table(rows)
        with pytest.raises(KeyError):
            table.membership_indicator("nonexistent")


class TestAttributeTable:
    def test_row_validation(self):
        with pytest.raises(ValueError):
            _row("p", 0, "g")
        with pytest.raises(ValueError):
            AttributeRow(
                prompt="p", predicted_gender="Other", monk_rank=5,
                happy=0.0, sad=0.0, angry=0.0, group="g",
            )
        with pytest.raises(ValueError):
            AttributeRow(
                prompt="p", predicted_gender="Man", monk_rank=5,
                happy=1.5, sad=0.0, angry=0.0, group="g",
            )

    def test_csv_round_trip(self, tmp_path):
        rows = [_row(f"p{i}", 1 + i % 10, "criminal" if i < 6 else "other") for i in range(12)]
        table = _table(rows)
        path = tmp_path / "attrs.csv"
        table.to_csv(path)
        back = AttributeTable.from_csv(path, table.config)
        assert [r.prompt for r in back.rows] == [r.prompt for r in table.rows]
        assert [r.monk_rank for r in back.rows] == [r.monk_rank for r in table.rows]

    def test_exclusive_override(self):
        config = GroupConfig(
            groups={"a": ("p0", "p1"), "b": ("p1", "p2")},
            exclusive_overrides={"p1": "b"},
        )
        assert config.exclusive_label("p1") == "b"
        assert config.exclusive_label("p0") == "a"
        with pytest.raises(KeyError):
            config.exclusive_label("unknown")

    def test_ambiguous_membership_without_override(self):
        config = GroupConfig(groups={"a": ("p0",), "b": ("p0",)})
        with pytest.raises(ValueError):
            config.exclusive_label("p0")
