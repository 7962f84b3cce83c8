"""Independent brute-force references used by the tests.

Nothing here imports the package's solvers.
"""
from __future__ import annotations

import math

import numpy as np


def brute_sharp(W, f):
    """O(n^2) minimax: evaluate J at every pairwise crossing and every f_i."""
    W = np.asarray(W, dtype=float)
    f = np.asarray(f, dtype=float)
    cands = [f]
    Wi, Wj = np.meshgrid(W, W, indexing="ij")
    fi, fj = np.meshgrid(f, f, indexing="ij")
    cands.append(((Wi * fi + Wj * fj) / (Wi + Wj)).ravel())
    c = np.concatenate(cands)
    J = np.max(W[None, :] * np.abs(f[None, :] - c[:, None]), axis=1)
    k = int(np.argmin(J))
    return float(c[k]), float(J[k])


def grid_objective(W, f, cs):
    W = np.asarray(W, dtype=float)
    f = np.asarray(f, dtype=float)
    return np.max(W[None, :] * np.abs(f[None, :] - np.asarray(cs)[:, None]), axis=1)


def brute_luxemburg(W, f, phi, iters=200):
    """Bisect lam directly on inf_c max Phi(W|f - c| / lam) <= 1 with the brute-force centre."""
    _, S = brute_sharp(W, f)
    if S == 0:
        return 0.0

    def ok(lam):
        with np.errstate(over="ignore"):
            return float(phi(S / lam)) <= 1.0

    lo, hi = 0.0, 1.0
    while not ok(hi):
        lo, hi = hi, hi * 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def two_end_tail(x_lo, x_hi):
    """Tail value of e^{-x} under e^{x}: |1 - c e^x| balanced at the tail's end points."""
    a, b = math.exp(x_lo), math.exp(x_hi)
    return (b - a) / (b + a)


def huber(x, lam):
    x = np.abs(np.asarray(x, dtype=float))
    return np.where(x <= lam, x * x / (2 * lam), x - lam / 2)


def count_components(vertices, edges, keep):
    """Plain BFS component count of the subgraph induced by ``keep``."""
    adj = {v: [] for v in vertices if keep(v)}
    for a, b in edges:
        if a in adj and b in adj:
            adj[a].append(b)
            adj[b].append(a)
    seen, count = set(), 0
    for v in adj:
        if v in seen:
            continue
        count += 1
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return count


def urysohn_sum(m, frac=1.0):
    """Literal sum_n n * phi_n for the discrete surrogate."""
    total = 0.0
    for n in range(m + 2):
        if m >= n + 2:
            phi = 1.0
        elif m == n + 1:
            phi = frac
        else:
            phi = 0.0
        total += n * phi
    return total
