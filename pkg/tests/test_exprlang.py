import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate import exprlang
from tailrate.errors import EvalError, ParseError
from tailrate.exprlang import BinOp, Call, Neg, Num, Var, evaluate, parse, to_source


def ev(src, **b):
    return evaluate(parse(src, tuple(b) or ("x",)), b or {"x": 0.0})


def test_unary_minus_binds_looser_than_power():
    assert ev("-2^2") == -4.0
    assert ev("2^-1") == 0.5
    assert ev("2^3^2") == 512.0


def test_arithmetic_precedence():
    assert ev("1 + 2 * 3") == 7.0
    assert ev("(1 + 2) * 3") == 9.0
    assert ev("8 / 4 / 2") == 1.0
    assert ev("10 - 4 - 3") == 3.0


def test_functions_and_constants():
    assert ev("exp(0) + ln(e) + log(1)") == 2.0
    assert ev("min(3, 1, 2) + max(1, 5)") == 6.0
    assert ev("pow(2, 10)") == 1024.0
    assert math.isclose(ev("sin(pi/2) + cos(0) + tanh(0) + sqrt(4) + abs(-1)"), 5.0)


def test_unicode_minus_is_accepted():
    assert ev("exp(−x)", x=0.0) == 1.0


def test_vector_evaluation():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate(parse("x^2 + 1"), {"x": x}), x**2 + 1)


def test_two_variables_broadcast():
    out = evaluate(parse("x*y", ("x", "y")), {"x": np.arange(3.0), "y": 2.0})
    np.testing.assert_array_equal(out, [0.0, 2.0, 4.0])


@pytest.mark.parametrize(
    "src, fragment, offset",
    [
        ("x + z", "unknown variable 'z'", 4),
        ("foo(x)", "unknown function 'foo'", 0),
        ("(x + 1", "unbalanced parentheses", 0),
        ("x + 1)", "unbalanced parentheses", 5),
        ("pow(x)", "arity mismatch", 0),
        ("x $ 1", "unexpected character", 2),
        ("−z", "unknown variable", 3),
    ],
)
def test_parse_errors_carry_byte_offsets(src, fragment, offset):
    with pytest.raises(ParseError) as err:
        parse(src)
    assert fragment in str(err.value)
    assert err.value.offset == offset


@pytest.mark.parametrize(
    "src, x, fragment",
    [
        ("1/x", 0.0, "division by zero"),
        ("ln(x)", -1.0, "nonpositive"),
        ("sqrt(x)", -1.0, "sqrt of negative"),
        ("exp(x)", 1e4, "non-finite"),
    ],
)
def test_eval_errors_name_the_subtree(src, x, fragment):
    with pytest.raises(EvalError) as err:
        evaluate(parse(src), {"x": x})
    assert fragment in str(err.value)
    assert err.value.subtree


def test_missing_binding():
    with pytest.raises(EvalError):
        evaluate(parse("x"), {})


leaf = st.one_of(
    st.floats(0, 100, allow_nan=False).map(lambda v: Num(float(v))),
    st.just(Var("x")),
)


def _tree(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(lambda a: Call("exp", (a,)), children),
        st.builds(lambda a, b: Call("max", (a, b)), children, children),
    )


trees = st.recursive(leaf, _tree, max_leaves=12)


@given(trees)
def test_print_parse_round_trip(tree):
    text = to_source(tree)
    assert parse(text).root == tree
    assert to_source(parse(text)) == text
