import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate import _kernels_py, kernels
from oracles import brute_sharp

BACKENDS = kernels.backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")

finite = st.floats(-5, 5, allow_nan=False)
weight = st.floats(1, 10, allow_nan=False)


@st.composite
def instances(draw):
    n = draw(st.integers(1, 40))
    W = draw(st.lists(weight, min_size=n, max_size=n))
    f = draw(st.lists(finite, min_size=n, max_size=n))
    return np.array(W), np.array(f)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(inst=instances())
def test_minimax_matches_brute_force(name, inst):
    W, f = inst
    c, v, _ = BACKENDS[name].minimax_center(W, f)
    _, ref = brute_sharp(W, f)
    assert abs(v - ref) <= 1e-9 * (1 + ref)
    assert abs(np.max(W * np.abs(f - c)) - v) <= 1e-12 * (1 + v)


@needs_cython
@given(inst=instances())
def test_backends_agree_bitwise_on_minimax(inst):
    W, f = inst
    assert BACKENDS["cython"].minimax_center(W, f) == BACKENDS["python"].minimax_center(W, f)


@needs_cython
def test_backends_agree_on_moreau(rng):
    x = rng.uniform(-3, 3, (300, 2))
    f = rng.normal(size=300)
    a = BACKENDS["cython"].moreau_coords(x, f, 0.3)
    b = BACKENDS["python"].moreau_coords(x, f, 0.3)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    D = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    np.testing.assert_allclose(BACKENDS["cython"].moreau_dist(D, f, 0.3), b, rtol=0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_components_on_two_paths(name):
    eu = np.array([0, 1, 3, 4], dtype=np.int64)
    ev = np.array([1, 2, 4, 5], dtype=np.int64)
    mask = np.array([1, 1, 1, 1, 1, 1], dtype=np.uint8)
    labels = BACKENDS[name].components(6, eu, ev, mask)
    assert list(labels) == [0, 0, 0, 1, 1, 1]
    mask[1] = 0
    labels = BACKENDS[name].components(6, eu, ev, mask)
    assert list(labels) == [0, -1, 1, 2, 2, 2]


def test_constant_sample_has_zero_value():
    c, v, it = _kernels_py.minimax_center(np.ones(4), np.full(4, 3.5))
    assert (c, v, it) == (3.5, 0.0, 0)


def test_pure_python_switch():
    env = dict(os.environ, TAILRATE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import tailrate.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
