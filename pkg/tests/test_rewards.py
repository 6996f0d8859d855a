import numpy as np
import pytest

from srkit.expressions import extract_skeleton
from srkit.parsing import parse
from srkit.rewards import (
    DEFAULT_WEIGHTS,
    RewardBreakdown,
    RewardWeights,
    compute_reward,
    equiv_reward,
    format_reward,
    group_advantages,
    is_valid,
    normalize_by_group,
    numerical_reward,
    similarity_reward,
    total_reward,
)
from srkit.sampling import sample_matrix


def _skel(text):
    return extract_skeleton(parse(text))


def _matrix(text, k=50, seed=0):
    return sample_matrix(parse(text), k=k, rng=np.random.default_rng(seed))


class TestValidity:
    def test_quadratic_skeleton_valid(self):
        assert is_valid("C*x_0**2 + C", arity=1)

    def test_syntax_error_invalid(self):
        assert not is_valid("x_0 + *", arity=1)

    def test_no_probe_point_invalid(self):
        assert not is_valid("sqrt(-4 - x_0**2)", arity=1)

    def test_function_outside_pool_invalid(self):
        assert not is_valid("tan(x_0)", arity=1)

    def test_variable_beyond_arity_invalid(self):
        assert not is_valid("x_2 + x_0", arity=2)
        assert is_valid("x_2 + x_0", arity=3)

    def test_partial_domain_still_valid(self):
        # log only covers half the probe box; one good point suffices
        assert is_valid("log(x_0)", arity=1)


class TestFormatReward:
    def test_valid_scores_one(self):
        assert format_reward("C*x_0 + C", arity=1) == 1.0

    def test_unbalanced_parens_penalized(self):
        assert format_reward("((x_0", arity=1) == -1.0

    def test_unknown_function_penalized(self):
        assert format_reward("tan(x_0)", arity=1) == -1.0


class TestSimilarityAndEquiv:
    def test_identical_skeletons(self):
        assert similarity_reward(_skel("C*x_0 + C"), _skel("C*x_0 + C")) == 1.0
        assert equiv_reward(_skel("C*x_0 + C"), _skel("C*x_0 + C")) == 1.0

    def test_equiv_ignores_coefficients(self):
        assert equiv_reward(_skel("2.5*x_0 + 1.0"), _skel("-3.0*x_0 + 0.25")) == 1.0

    def test_partial_form(self):
        assert equiv_reward(_skel("C*x_0"), _skel("C*x_0 + C")) == 0.0
        assert 0.0 < similarity_reward(_skel("C*x_0"), _skel("C*x_0 + C")) < 1.0

    def test_commutative_reordering_not_equivalent(self):
        assert equiv_reward(_skel("x_0 + C"), _skel("C + x_0")) == 0.0

    def test_similarity_in_unit_interval(self):
        v = similarity_reward(_skel("sin(x_0)"), _skel("C/x_1 + C"))
        assert 0.0 <= v <= 1.0


class TestNumericalReward:
    def test_exact_reproduction_scores_one(self):
        m = _matrix("2.0*x_0 + 1.0")
        assert numerical_reward("2.0*x_0 + 1.0", m) == 1.0

    def test_invalid_scores_zero(self):
        m = _matrix("2.0*x_0 + 1.0")
        assert numerical_reward("x_0 + *", m) == 0.0

    def test_constant_prediction_truncated_to_zero(self):
        m = _matrix("3.0*x_0")
        assert numerical_reward("C", m) == 0.0

    def test_refits_wrong_coefficients(self):
        m = _matrix("2.0*x_0 + 1.0")
        assert numerical_reward("7.7*x_0 - 4.2", m) > 0.9999


class TestTotalReward:
    def test_weighted_sum_example(self):
        parts = RewardBreakdown(format=1.0, similarity=0.6, numerical=0.5, equiv=0.0, total=0.0)
        assert total_reward(parts, DEFAULT_WEIGHTS) == pytest.approx(3.2)

    def test_perfect_match(self):
        parts = RewardBreakdown(format=1.0, similarity=1.0, numerical=1.0, equiv=1.0, total=0.0)
        assert total_reward(parts, DEFAULT_WEIGHTS) == pytest.approx(9.0)

    def test_invalid_formula_instantiation(self):
        for s in (0.0, 0.3, 1.0):
            parts = RewardBreakdown(format=-1.0, similarity=s, numerical=0.0, equiv=0.0, total=0.0)
            assert total_reward(parts, DEFAULT_WEIGHTS) == pytest.approx(-1.0 + 2.0 * s)

    def test_default_weights(self):
        assert (
            DEFAULT_WEIGHTS.w_format,
            DEFAULT_WEIGHTS.w_similarity,
            DEFAULT_WEIGHTS.w_numerical,
            DEFAULT_WEIGHTS.w_equiv,
        ) == (1.0, 2.0, 2.0, 4.0)

    def test_weights_must_be_finite(self):
        with pytest.raises(ValueError):
            RewardWeights(w_format=float("nan"))


class TestBreakdown:
    def test_numerical_positive_only_when_valid(self):
        m = _matrix("2.0*x_0 + 1.0")
        parts = compute_reward("x_5 + 1", _skel("C*x_0 + C"), m)
        assert parts.format == -1.0
        assert parts.numerical == 0.0

    def test_exact_candidate_maxes_out(self):
        m = _matrix("2.0*x_0 + 1.0")
        parts = compute_reward("2.0*x_0 + 1.0", _skel("2.0*x_0 + 1.0"), m)
        assert (parts.format, parts.similarity, parts.numerical, parts.equiv) == (1.0, 1.0, 1.0, 1.0)
        assert parts.total == pytest.approx(9.0)

    def test_unparsable_candidate(self):
        m = _matrix("2.0*x_0 + 1.0")
        parts = compute_reward("definitely not math", _skel("C*x_0 + C"), m)
        assert parts.format == -1.0
        assert parts.similarity == 0.0 and parts.equiv == 0.0
        assert parts.total == pytest.approx(-1.0)


class TestGroupAdvantages:
    def test_hand_computed_triple(self):
        adv = group_advantages([1.0, 2.0, 3.0])
        np.testing.assert_allclose(adv, [-1.2247, 0.0, 1.2247], atol=1e-4)
        assert abs(float(np.mean(adv))) < 1e-9

    def test_degenerate_group_is_zeros(self):
        np.testing.assert_array_equal(group_advantages([5.0, 5.0, 5.0, 5.0]), np.zeros(4))

    def test_zero_mean_and_unit_variance(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rewards = rng.normal(0, 3, size=8)
            adv = group_advantages(rewards)
            assert abs(float(np.mean(adv))) < 1e-9
            assert abs(float(np.var(adv)) - 1.0) < 1e-6

    def test_group_too_small(self):
        with pytest.raises(ValueError):
            group_advantages([1.0])

    def test_normalize_by_group_fills_in_place(self):
        parts = [
            RewardBreakdown(1.0, 0.0, 0.0, 0.0, total=t) for t in (1.0, 2.0, 3.0, 7.0)
        ]
        normalize_by_group(parts, ["a", "a", "a", "b"])
        assert parts[3].group_advantage is None  # singleton group stays unnormalized
        group = [p.group_advantage for p in parts[:3]]
        np.testing.assert_allclose(group, [-1.2247, 0.0, 1.2247], atol=1e-4)
