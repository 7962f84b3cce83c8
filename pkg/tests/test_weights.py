import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate.errors import DomainError, InputError, NoRootError, WeightRangeError
from tailrate.weights import (
    Weight,
    YoungFunction,
    check_admissibility,
    check_young,
    eval_weight,
    parse_weight,
    parse_young,
    young_eval_and_inverse,
)

GRID = np.linspace(0, 20, 81)


@pytest.mark.parametrize("spec", ["poly:p=2", "logpoly:p=1,q=2", "exp:a=0.5", "custom:(1+t)^2"])
def test_spec_round_trip(spec):
    assert parse_weight(spec).spec() == spec
    assert parse_weight(str(parse_weight(spec))) == parse_weight(spec)


def test_closed_forms():
    assert eval_weight(Weight.polynomial(2), 3.0) == 16.0
    assert math.isclose(eval_weight(Weight.log_polynomial(1, 2), math.e - 1), math.e * 4)
    assert math.isclose(eval_weight(Weight.exponential(1), 2.0), math.e**2)
    assert eval_weight(parse_weight("custom:1+t"), 4.0) == 5.0


def test_negative_argument_is_a_domain_error():
    with pytest.raises(DomainError):
        eval_weight(Weight.polynomial(1), -0.5)


def test_custom_weight_below_one_is_rejected():
    with pytest.raises(WeightRangeError):
        eval_weight(parse_weight("custom:0.5+t"), 0.0)


def test_bad_specs():
    for spec in ("cubic:p=1", "poly:r=1", "poly:p=abc", "custom:"):
        with pytest.raises(InputError):
            parse_weight(spec)
    with pytest.raises(InputError):
        Weight.polynomial(-1)


@pytest.mark.parametrize("w", [Weight.polynomial(3), Weight.exponential(2), Weight.log_polynomial(1, 1)])
def test_builtin_families_are_submultiplicative(w):
    rep = check_admissibility(w, GRID)
    assert rep.ok
    assert rep.submult_constant_K == pytest.approx(1.0, abs=1e-12)


def test_k_is_exact_on_pairs():
    # phi(t) = 1 + t^2: phi(1+1) / phi(1)^2 = 5/4, the grid maximum is at r = s = 1
    rep = check_admissibility(parse_weight("custom:1+t^2"), np.linspace(0, 4, 5), cap=1.2)
    assert rep.submult_constant_K == pytest.approx(1.25)
    assert (1.0, 1.0, 1.25) in rep.violations


def test_nonmonotone_weight_is_flagged():
    rep = check_admissibility(parse_weight("custom:2 + cos(t) - 1"), GRID)
    assert not rep.monotone_ok


@given(st.floats(0, 4), st.floats(0, 30), st.floats(0, 30))
def test_polynomial_submultiplicativity(p, r, s):
    w = Weight.polynomial(p)
    assert w.raw(r + s) <= w.raw(r) * w.raw(s) * (1 + 1e-12)


def test_young_inverse_at_one():
    assert young_eval_and_inverse(YoungFunction.power(2), 3.0) == (9.0, 1.0)
    assert young_eval_and_inverse(parse_young("expm1"), 0.0) == (0.0, math.log(2))
    assert parse_young("custom:t^3").inverse_at_one() == pytest.approx(1.0, abs=1e-10)


def test_young_without_level_one():
    with pytest.raises(NoRootError):
        parse_young("custom:0.5*t/(1+t)").inverse_at_one()


def test_young_grid_check():
    assert check_young(parse_young("power:e=2"), GRID)
    assert check_young(parse_young("expm1"), GRID)
    assert not check_young(parse_young("custom:sqrt(t)"), GRID)
