import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_form_similarity
from srkit.expressions import extract_skeleton
from srkit.generator import GeneratorConfig, generate_tree
from srkit.metrics import (
    R2_SENTINEL,
    MetricReport,
    acc_tau,
    aggregate,
    form_similarity,
    jaccard,
    pattern_sim,
    r_squared,
    ratio_sim,
)
from srkit.parsing import parse


def _skel(text):
    return extract_skeleton(parse(text))


class TestRSquared:
    def test_perfect_fit(self):
        assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0

    def test_mean_predictor_scores_zero(self):
        assert r_squared([2, 2, 2], [1, 2, 3]) == 0.0

    def test_hand_computed_negative(self):
        # 1 - 14/2
        assert r_squared([0, 0, 0], [1, 2, 3]) == -6.0

    def test_constant_target_matching(self):
        assert r_squared([5.0, 5.0], [5.0, 5.0]) == 1.0

    def test_constant_target_mismatch_is_sentinel(self):
        assert r_squared([1.0, 1.0], [5.0, 5.0]) == R2_SENTINEL

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            r_squared([1, 2], [1, 2, 3])

    def test_extreme_magnitudes_stay_finite(self):
        y = np.array([1e200, 2e200, -1e200])
        assert np.isfinite(r_squared(np.zeros(3), y))
        assert r_squared(y, y) == 1.0


class TestAccTau:
    def test_identity(self):
        assert acc_tau([1.0, 2.0], [1.0, 2.0]) == 1

    def test_rejects_twenty_percent_error_at_tau_ten(self):
        assert acc_tau([1.0, 1.2], [1.0, 1.0], tau=0.1) == 0

    def test_accepts_four_percent_error_at_default_tau(self):
        assert acc_tau([10.4, 10.4], [10.0, 10.0], tau=0.05) == 1

    def test_monotone_in_tau(self):
        y_t = [1.0, 2.0, 4.0]
        y_p = [1.05, 2.02, 4.1]
        accepted = [acc_tau(y_p, y_t, tau) for tau in (0.01, 0.03, 0.05, 0.2)]
        assert accepted == sorted(accepted)

    def test_zero_target_guard(self):
        assert acc_tau([1e-12, 1.0], [0.0, 1.0], tau=0.05) == 1


class TestComponentSimilarities:
    def test_jaccard_one_shared_of_three(self):
        assert jaccard({"+", "*"}, {"+", "/"}) == pytest.approx(1 / 3)

    def test_jaccard_both_empty(self):
        assert jaccard(set(), set()) == 1.0

    def test_jaccard_disjoint(self):
        assert jaccard({"sin"}, set()) == 0.0

    def test_ratio_half(self):
        assert ratio_sim(2, 4) == 0.5

    def test_ratio_both_zero(self):
        assert ratio_sim(0, 0) == 1.0

    def test_ratio_one_zero(self):
        assert ratio_sim(3, 0) == 0.0

    def test_pattern_identical(self):
        assert pattern_sim("C+VAR", "C+VAR") == 1.0

    def test_pattern_four_of_five(self):
        assert pattern_sim("C*VAR", "C+VAR") == pytest.approx(4 / 5)

    def test_pattern_prefix(self):
        assert pattern_sim("C", "C+VAR") == pytest.approx(1 / 5)

    def test_pattern_both_empty(self):
        assert pattern_sim("", "") == 1.0


class TestFormSimilarity:
    def test_identical_skeletons(self):
        value, per = form_similarity(_skel("C*x_0**2 + C"), _skel("C*x_0**2 + C"))
        assert value == 1.0
        assert all(v == 1.0 for v in per.values())

    def test_hand_computed_pair(self):
        # operators 1, functions 1, variables 1, constants 2/3,
        # pattern 12/20, complexity 3/5 -> mean = 73/90
        value, per = form_similarity(_skel("C*x_0**2 + C"), _skel("C*x_0**2 + C*x_0 + C"))
        assert value == pytest.approx(73 / 90, abs=1e-12)
        assert per["constants"] == pytest.approx(2 / 3)
        assert per["pattern"] == pytest.approx(0.6)
        assert per["complexity"] == pytest.approx(0.6)

    def test_disjoint_forms_score_low(self):
        value, _ = form_similarity(_skel("sin(x_0)"), _skel("C/x_1 + C"))
        assert value == pytest.approx(1 / 6, abs=1e-12)
        assert value < 0.3

    def test_matches_string_oracle(self):
        rng = np.random.default_rng(123)
        cfg = GeneratorConfig(seed=123, target_count=1)
        skels = [extract_skeleton(generate_tree(cfg, rng)) for _ in range(60)]
        for i in range(0, 60, 2):
            a, b = skels[i], skels[i + 1]
            value, _ = form_similarity(a, b)
            expected = oracle_form_similarity(a.canonical_string, b.canonical_string)
            assert value == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        cfg = GeneratorConfig(seed=seed, target_count=1)
        a = extract_skeleton(generate_tree(cfg, rng))
        b = extract_skeleton(generate_tree(cfg, rng))
        v_ab, _ = form_similarity(a, b)
        v_ba, _ = form_similarity(b, a)
        assert v_ab == v_ba
        assert 0.0 <= v_ab <= 1.0
        assert form_similarity(a, a)[0] == 1.0


class TestAggregate:
    def _report(self, r2, acc, s):
        return MetricReport(r2=r2, acc_tau=acc, s_struct=s)

    def test_single_report_is_itself(self):
        summary = aggregate([self._report(0.7, 1, 0.5)])
        assert (summary.r2, summary.acc_tau, summary.s_struct) == (0.7, 1.0, 0.5)

    def test_negative_r2_clipped_in_mean(self):
        summary = aggregate([self._report(-6.0, 0, 0.2), self._report(1.0, 1, 0.4)])
        assert summary.r2 == 0.5
        assert summary.r2_unclipped == -2.5

    def test_acc_mean(self):
        summary = aggregate([self._report(1, a, 1) for a in (1, 0, 1, 0)])
        assert summary.acc_tau == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])
