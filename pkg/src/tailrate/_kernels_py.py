"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation so that both backends
return identical results for the minimax solver and component labelling.
"""
from __future__ import annotations

import numpy as np

MAX_BISECTIONS = 200
REL_TOL = 1e-12


def _objective(w, f, c):
    return float(np.max(w * np.abs(f - c)))


def minimax_center(w, f):
    """Minimise ``J(c) = max_i w_i |f_i - c|`` over real ``c``.

    Returns ``(c_star, value, iterations)``.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if f.size == 0:
        return 0.0, 0.0, 0
    lo = float(f.min())
    hi = float(f.max())
    if hi == lo:
        return lo, 0.0, 0
    span = hi - lo
    it = 0
    while it < MAX_BISECTIONS and hi - lo > REL_TOL * span:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        up = float(np.max(w * (mid - f)))
        down = float(np.max(w * (f - mid)))
        if up < down:
            lo = mid
        else:
            hi = mid
        it += 1

    # the optimum sits where the active rising and falling lines cross
    rising = {int(np.argmax(w * (lo - f))), int(np.argmax(w * (hi - f)))}
    falling = {int(np.argmax(w * (f - lo))), int(np.argmax(w * (f - hi)))}
    cands = [lo, hi]
    for i in sorted(rising):
        for j in sorted(falling):
            cands.append((w[i] * f[i] + w[j] * f[j]) / (w[i] + w[j]))
    best_c = cands[0]
    best_v = _objective(w, f, best_c)
    for c in cands[1:]:
        v = _objective(w, f, c)
        if v < best_v:
            best_c, best_v = c, v
    return float(best_c), best_v, it


def moreau_coords(x, f, lam, block=256):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    f = np.ascontiguousarray(f, dtype=np.float64)
    n = f.size
    out = np.empty(n)
    scale = 1.0 / (2.0 * lam)
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        out[start:stop] = np.min(f[None, :] + d2 * scale, axis=1)
    return out


def moreau_dist(dist, f, lam):
    dist = np.asarray(dist, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    return np.min(f[None, :] + dist * dist * (1.0 / (2.0 * lam)), axis=1)


def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        parent[a], a = root, parent[a]
    return root


def components(n, eu, ev, mask):
    """Label connected components of the subgraph induced by ``mask``.

    Vertices outside the mask get label -1; labels are numbered in order of
    the smallest vertex index of each component.
    """
    parent = list(range(n))
    mask = np.asarray(mask, dtype=bool)
    for a, b in zip(np.asarray(eu).tolist(), np.asarray(ev).tolist()):
        if not (mask[a] and mask[b]):
            continue
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra != rb:
            # smaller index wins so labelling is order independent
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
    labels = np.full(n, -1, dtype=np.int64)
    seen: dict[int, int] = {}
    for v in range(n):
        if not mask[v]:
            continue
        r = _find(parent, v)
        if r not in seen:
            seen[r] = len(seen)
        labels[v] = seen[r]
    return labels
