import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srkit.expressions import (
    BINARY_KINDS,
    UNARY_KINDS,
    BinaryOp,
    C,
    Constant,
    UnaryFn,
    Variable,
    extract_skeleton,
    to_string,
)
from srkit.generator import GeneratorConfig, generate_tree, instantiate_coefficients
from srkit.parsing import ParseError, parse


class TestParseExamples:
    def test_quadratic_skeleton(self):
        expected = BinaryOp(
            "add",
            BinaryOp("mul", C, BinaryOp("pow", Variable(0), Constant(2))),
            C,
        )
        assert parse("C*x_0**2 + C") == expected

    def test_single_leaf(self):
        assert parse("x_0") == Variable(0)

    def test_arctan_chain_shape(self):
        expr = parse("C*x_1 + C*arctan(C*x_0 + C) + C")
        # left-associative: ((C*x_1 + C*arctan(...)) + C)
        assert isinstance(expr, BinaryOp) and expr.kind == "add"
        assert isinstance(expr.left, BinaryOp) and expr.left.kind == "add"
        assert expr.right == C
        inner = expr.left.right
        assert isinstance(inner, BinaryOp) and inner.kind == "mul"
        assert isinstance(inner.right, UnaryFn) and inner.right.kind == "arctan"

    def test_whitespace_insensitive(self):
        assert parse("C * x_0 ** 2+C") == parse("C*x_0**2 + C")


class TestPrecedence:
    def test_pow_binds_tighter_than_unary_minus(self):
        assert parse("-x_0**2") == BinaryOp(
            "mul", Constant(-1), BinaryOp("pow", Variable(0), Constant(2))
        )

    def test_mul_div_left_associative(self):
        assert parse("x_0/x_1/x_2") == BinaryOp(
            "div", BinaryOp("div", Variable(0), Variable(1)), Variable(2)
        )

    def test_add_sub_left_associative(self):
        assert parse("x_0 - x_1 + x_2") == BinaryOp(
            "add", BinaryOp("sub", Variable(0), Variable(1)), Variable(2)
        )

    def test_pow_right_associative(self):
        assert parse("x_0**2**3") == BinaryOp(
            "pow", Variable(0), BinaryOp("pow", Constant(2), Constant(3))
        )

    def test_unary_minus_folds_into_literals(self):
        assert parse("-3.5") == Constant(-3.5)
        assert parse("x_0 + -2.0") == BinaryOp("add", Variable(0), Constant(-2.0))

    def test_unary_minus_on_variable_multiplies(self):
        assert parse("-x_0") == BinaryOp("mul", Constant(-1), Variable(0))

    def test_scientific_notation(self):
        assert parse("1e-05") == Constant(1e-05)
        assert parse("2.5e+20") == Constant(2.5e20)


class TestParseErrors:
    @pytest.mark.parametrize(
        "text",
        ["", "x_0 + *", "((x_0", "x_0)", "sin", "sin x_0", "tan(x_0)", "y_0", "x_", "2 +", "x_0 x_1", "3..5"],
    )
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse(text)

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse("x_0 + *")
        assert err.value.position == 6

    def test_unknown_identifier_position(self):
        with pytest.raises(ParseError) as err:
            parse("C*tan(x_0)")
        assert err.value.position == 2


# hypothesis strategy over raw trees, to hammer printer/parser corners
_leaves = st.one_of(
    st.integers(0, 3).map(Variable),
    st.just(C),
    st.integers(-1000, 1000).map(Constant),
    st.floats(allow_nan=False, allow_infinity=False, width=64).map(Constant),
)


def _branch(children):
    return st.one_of(
        st.tuples(st.sampled_from(BINARY_KINDS), children, children).map(
            lambda t: BinaryOp(t[0], t[1], t[2])
        ),
        st.tuples(st.sampled_from(UNARY_KINDS), children).map(lambda t: UnaryFn(t[0], t[1])),
    )


_trees = st.recursive(_leaves, _branch, max_leaves=25)


class TestRoundTrip:
    @settings(max_examples=300, deadline=None)
    @given(_trees)
    def test_arbitrary_trees(self, tree):
        assert parse(to_string(tree)) == tree

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_generated_skeletons_and_instances(self, seed):
        rng = np.random.default_rng(seed)
        cfg = GeneratorConfig(seed=seed, target_count=1)
        tree = generate_tree(cfg, rng)
        assert parse(to_string(tree)) == tree
        expr = instantiate_coefficients(extract_skeleton(tree), rng)
        assert parse(to_string(expr)) == expr

    @settings(max_examples=150, deadline=None)
    @given(_trees)
    def test_skeleton_idempotence(self, tree):
        skel = extract_skeleton(tree)
        assert extract_skeleton(skel.expr) == skel
        assert parse(skel.canonical_string) == skel.expr
