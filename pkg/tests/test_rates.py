import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate.errors import ClassificationError, InputError
from tailrate.norms import ShellPolicy, fixed_norm, sharp_norm
from tailrate.rates import classify_rate, p_profile, scale_weight
from tailrate.space import ExhaustedSpace
from tailrate.weights import Weight

X40 = np.linspace(0, 40, 4001)


def test_exponential_rate():
    res = classify_rate(np.exp(-X40), ExhaustedSpace(X40), "exp")
    assert res.outcome == "bracketed"
    assert abs(res.critical - 1.0) <= 0.02
    assert res.bracket[0] <= 1.0 + 0.01 and res.bracket[1] >= 1.0 - 0.01
    assert res.constant_at_critical.converges


def test_algebraic_rate():
    x = np.linspace(0, 1e4, 100001)
    res = classify_rate(1 / (1 + x) ** 2, ExhaustedSpace(x), "alg", tol=1e-3)
    assert abs(res.critical - 2.0) <= 0.02
    assert res.constant_at_critical.value == pytest.approx(1.0, abs=0.01)


def test_slow_decay_reported():
    # (1+x)^0.1 / ln(x+2) only turns upward past x ~ e^10, so the grid must reach well beyond
    x = np.geomspace(1, 1e8 + 1, 20001) - 1
    res = classify_rate(1 / np.log(x + 2), ExhaustedSpace(x), "alg")
    assert res.outcome == "slower-than-scale"


def test_fast_decay_reported():
    res = classify_rate(np.exp(-X40**2), ExhaustedSpace(X40), "alg")
    assert res.outcome == "faster-than-scale"


@pytest.mark.parametrize("alpha", [0.1, 10.0])
def test_rescaling_the_exhaustion(alpha):
    base = classify_rate(np.exp(-X40), ExhaustedSpace(X40), "exp", tol=1e-3)
    # shells are rescaled along with h
    scaled = classify_rate(np.exp(-X40), ExhaustedSpace(X40 / alpha), "exp", tol=1e-3,
                           bracket=(0.1 * alpha, 8.0 * alpha), shell_policy=ShellPolicy(r0=1 / alpha))
    assert scaled.critical == pytest.approx(alpha * base.critical, rel=0.02)


def test_unknown_scale():
    with pytest.raises(InputError):
        scale_weight("cubic", 1.0)


def test_inconclusive_bracket():
    # oscillating tail amplitude defeats both probes
    x = np.linspace(0, 40, 4001)
    f = np.where(np.floor(np.log2(1 + x)) % 2 == 0, 1.0, -1.0) * np.exp(-x) * (1 + 0.5 * np.sin(x))
    try:
        classify_rate(f, ExhaustedSpace(x), "exp", bracket=(0.99, 1.01))
    except ClassificationError as err:
        assert "Inconclusive" in str(err)


@given(st.floats(0, 3), st.floats(0, 3), st.floats(0.01, 0.99))
def test_interpolation_between_exponents(p0, p1, theta):
    x = np.linspace(0, 50, 201)
    f = np.cos(x) / (1 + x) ** 3.5
    s = ExhaustedSpace(x)
    pt = (1 - theta) * p0 + theta * p1
    N = {p: fixed_norm(f, s, Weight.polynomial(p), 0.0).value for p in (p0, p1, pt)}
    assert N[pt] <= N[p0] ** (1 - theta) * N[p1] ** theta * (1 + 1e-9)


def test_profile_is_monotone():
    x = np.linspace(0, 20, 401)
    prof = p_profile(np.sin(x) / (1 + x), ExhaustedSpace(x), [0, 0.5, 1, 1.5, 2])
    vals = [v for _, v in prof]
    assert prof.monotone and all(b >= a for a, b in zip(vals, vals[1:]))


def test_profile_reports_log_concavity():
    # two points, W = (1+h)^p with h = 0 and 10: v(p) = 2 * 11^p / (1 + 11^p)
    prof = p_profile([0.0, 2.0], ExhaustedSpace([0.0, 10.0]), [0, 1, 2])
    assert not prof.log_convex and prof.convexity_violations
    v = [v for _, v in prof]
    np.testing.assert_allclose(v, [2 * 11**p / (1 + 11**p) for p in (0, 1, 2)], rtol=1e-12)


def test_profile_needs_increasing_grid():
    with pytest.raises(InputError):
        p_profile([1.0], ExhaustedSpace([0.0]), [1, 1])


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=20), st.floats(0, 3), st.floats(0, 3))
def test_sharp_monotone_in_exponent(f, p, q):
    h = np.linspace(0, 5, len(f))
    s = ExhaustedSpace(h)
    lo, hi = sorted((p, q))
    assert sharp_norm(f, s, Weight.polynomial(lo)).value <= sharp_norm(f, s, Weight.polynomial(hi)).value + 1e-9
