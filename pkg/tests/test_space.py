import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailrate.errors import DegenerateError, InputError, InsufficientDataError
from tailrate.space import (
    ExhaustedSpace,
    Graph,
    build_exhaustion_from_membership,
    detect_graph_ends,
    fit_coarse_affine,
    fit_volume_growth,
)
from oracles import count_components, urysohn_sum


# exhaustion builder

def test_membership_examples():
    h = build_exhaustion_from_membership([0, 3, 5])
    assert h[0] == 0.0
    assert h[1] == 3.0
    assert h[2] >= 10.0


@given(st.lists(st.integers(0, 60), min_size=1, max_size=30))
def test_builder_matches_literal_sum_and_lower_bound(ms):
    h = build_exhaustion_from_membership(ms)
    for m, v in zip(ms, h):
        assert v == urysohn_sum(m)
        if m >= 1:
            assert v >= (m - 1) * m / 2


@given(st.integers(0, 50), st.integers(0, 50))
def test_builder_is_monotone(a, b):
    ha, hb = build_exhaustion_from_membership([a, b])
    assert (a <= b) <= (ha <= hb)


def test_annulus_fraction():
    h = build_exhaustion_from_membership([3, 3], annulus_fraction=[0.0, 0.5])
    assert list(h) == [urysohn_sum(3, 0.0), urysohn_sum(3, 0.5)]


def test_negative_membership_rejected():
    with pytest.raises(InputError):
        build_exhaustion_from_membership([1, -1])


# space invariants

def test_space_validation():
    with pytest.raises(InputError):
        ExhaustedSpace([0.0, -1.0])
    with pytest.raises(InputError):
        ExhaustedSpace([0.0, 1.0], ids=[3, 3])
    with pytest.raises(InputError):
        ExhaustedSpace([5.0, 1.0], membership=[0, 1])
    s = ExhaustedSpace([0.0, 1.0, 2.0])
    assert list(s.mu) == [1.0, 1.0, 1.0]
    assert len(s.subset(s.sublevel(1.0))) == 2


# coarse affine fits

def test_affine_relation_is_recovered_tightly():
    h = np.linspace(0, 50, 101)
    env = fit_coarse_affine(h, 2 * h + 3)
    assert env.A == pytest.approx(2) and env.a == pytest.approx(2)
    assert env.B == pytest.approx(3, abs=1e-9)
    assert env.b <= 1e-9
    assert env.tight


def test_identity():
    h = np.linspace(0, 10, 11)
    env = fit_coarse_affine(h, h)
    assert (env.a, env.b, env.A, env.B) == (1.0, 0.0, 1.0, 0.0)


def test_sine_perturbation_has_unit_slope():
    h = np.arange(201) * 0.1
    hp = h + np.sin(h)
    env = fit_coarse_affine(h, hp)
    assert env.A == pytest.approx(1, abs=1e-3) and env.a == pytest.approx(1, abs=1e-3)
    assert env.B <= 1 + 1e-9 and env.b <= 1 + 1e-9
    assert np.all(env.lower(h) <= hp + 1e-9) and np.all(hp <= env.upper(h) + 1e-9)


def test_degenerate_cloud():
    with pytest.raises(DegenerateError):
        fit_coarse_affine([1.0, 1.0], [2.0, 3.0])


@given(
    st.floats(0.2, 5), st.floats(-10, 10),
    st.lists(st.floats(0, 100), min_size=3, max_size=40, unique=True),
)
def test_swapped_fit_composes_to_identity(slope, offset, hs):
    h = np.array(hs)
    hp = np.maximum(slope * h + offset, 0) + 0.1 * np.sin(h)
    if np.unique(hp).size < 2 or np.ptp(h) == 0:
        return
    try:
        fwd = fit_coarse_affine(h, hp)
        back = fit_coarse_affine(hp, h)
    except DegenerateError:
        return
    lo = back.a * (fwd.a * h - fwd.b) - back.b
    hi = back.A * (fwd.A * h + fwd.B) + back.B
    tol = 1e-6 * (1 + np.abs(h))
    assert np.all(lo <= h + tol) and np.all(h <= hi + tol)


# graph ends

def path_graph(N):
    edges = [(v, v + 1) for v in range(-N, N)]
    return Graph.from_edges(edges, {v: abs(v) for v in range(-N, N + 1)}), edges


def star_graph(k, N):
    edges, levels = [], {0: 0}
    for r in range(k):
        prev = 0
        for d in range(1, N + 1):
            v = 1 + r * N + (d - 1)
            edges.append((prev, v))
            levels[v] = d
            prev = v
    return Graph.from_edges(edges, levels), edges


def grid_graph(N):
    idx = lambda i, j: (i + N) * (2 * N + 1) + (j + N)  # noqa: E731
    edges, levels = [], {}
    for i in range(-N, N + 1):
        for j in range(-N, N + 1):
            levels[idx(i, j)] = max(abs(i), abs(j))
            if i < N:
                edges.append((idx(i, j), idx(i + 1, j)))
            if j < N:
                edges.append((idx(i, j), idx(i, j + 1)))
    return Graph.from_edges(edges, levels), edges


@pytest.mark.parametrize("build, expected", [
    (lambda: path_graph(10), 2),
    (lambda: star_graph(5, 8), 5),
    (lambda: grid_graph(6), 1),
])
def test_end_counts(build, expected):
    g, edges = build()
    res = detect_graph_ends(g, 3)
    assert res.n_ends == expected
    assert res.stable
    deep = [v for v in g.vertices if g.membership[v] > res.cutoff]
    assert sorted(res.assignment) == sorted(deep)
    # component counts agree with a plain BFS at every level
    for n, count in enumerate(res.component_counts):
        assert count == count_components(g.vertices, edges, lambda v: g.membership[v] > n)


def test_relabelling_does_not_change_the_count(rng):
    g, edges = star_graph(4, 6)
    perm = dict(zip(g.vertices, rng.permutation(len(g.vertices)).tolist()))
    g2 = Graph.from_edges([(perm[a], perm[b]) for a, b in edges], {perm[v]: m for v, m in g.membership.items()})
    assert detect_graph_ends(g2, 3).n_ends == 4


def test_dead_branch_is_transient():
    # a spur that stops at level 4 while the main path continues to 8
    edges = [(v, v + 1) for v in range(8)] + [(2, 100), (100, 101)]
    levels = {v: v for v in range(9)} | {100: 3, 101: 4}
    res = detect_graph_ends(Graph.from_edges(edges, levels), 5)
    assert res.n_ends == 1
    assert 101 in res.transient


def test_window_deeper_than_graph():
    g, _ = path_graph(2)
    with pytest.raises(InsufficientDataError):
        detect_graph_ends(g, 3)


def test_graph_invariants():
    with pytest.raises(InputError):
        Graph([0, 1], {0: [1], 1: []}, {0: 0, 1: 1})
    with pytest.raises(InputError):
        Graph.from_edges([(0, 1)], {0: 0, 1: 2})


# volume growth

def test_line_has_linear_growth():
    x = np.linspace(0, 100, 10001)
    fit = fit_volume_growth(ExhaustedSpace(x, mu=np.full(x.size, 0.01)), np.linspace(5, 100, 20))
    assert fit.gamma == pytest.approx(1, abs=0.05)
    V = np.array(fit.volumes)
    assert np.all(V <= fit.c_fit * (1 + np.array(fit.ladder)) ** fit.gamma * 1.05)


def test_disk_has_quadratic_growth():
    g = np.arange(-100, 101)
    X, Y = np.meshgrid(g, g)
    r = np.hypot(X, Y).ravel()
    fit = fit_volume_growth(ExhaustedSpace(r[r <= 100]), np.linspace(5, 100, 20))
    assert fit.gamma == pytest.approx(2, abs=0.1)


def test_volume_fit_errors():
    with pytest.raises(DegenerateError):
        fit_volume_growth(ExhaustedSpace([0.0]), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(DegenerateError):
        fit_volume_growth(ExhaustedSpace([0.0, 1.0], mu=[0.0, 0.0]), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(InputError):
        fit_volume_growth(ExhaustedSpace([0.0, 1.0]), [1.0, 2.0])
