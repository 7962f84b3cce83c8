# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef int MAX_BISECTIONS = 200
cdef double REL_TOL = 1e-12


cdef double _objective(const double[::1] w, const double[::1] f, double c) nogil:
    cdef Py_ssize_t k, n = f.shape[0]
    cdef double v, best = -1.0
    for k in range(n):
        v = w[k] * fabs(f[k] - c)
        if v > best:
            best = v
    return best


cdef Py_ssize_t _argmax_rising(const double[::1] w, const double[::1] f, double c) nogil:
    cdef Py_ssize_t k, arg = 0, n = f.shape[0]
    cdef double v, best = w[0] * (c - f[0])
    for k in range(1, n):
        v = w[k] * (c - f[k])
        if v > best:
            best = v
            arg = k
    return arg


cdef Py_ssize_t _argmax_falling(const double[::1] w, const double[::1] f, double c) nogil:
    cdef Py_ssize_t k, arg = 0, n = f.shape[0]
    cdef double v, best = w[0] * (f[0] - c)
    for k in range(1, n):
        v = w[k] * (f[k] - c)
        if v > best:
            best = v
            arg = k
    return arg


def minimax_center(w_in, f_in):
    cdef const double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] f = np.ascontiguousarray(f_in, dtype=np.float64)
    cdef Py_ssize_t k, n = f.shape[0]
    cdef double lo, hi, mid, up, down, span, v
    cdef int it = 0
    if n == 0:
        return 0.0, 0.0, 0
    lo = f[0]
    hi = f[0]
    for k in range(1, n):
        if f[k] < lo:
            lo = f[k]
        if f[k] > hi:
            hi = f[k]
    if hi == lo:
        return lo, 0.0, 0
    span = hi - lo
    with nogil:
        while it < MAX_BISECTIONS and hi - lo > REL_TOL * span:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            up = w[0] * (mid - f[0])
            down = w[0] * (f[0] - mid)
            for k in range(1, n):
                v = w[k] * (mid - f[k])
                if v > up:
                    up = v
                v = w[k] * (f[k] - mid)
                if v > down:
                    down = v
            if up < down:
                lo = mid
            else:
                hi = mid
            it += 1

    rising = sorted({_argmax_rising(w, f, lo), _argmax_rising(w, f, hi)})
    falling = sorted({_argmax_falling(w, f, lo), _argmax_falling(w, f, hi)})
    cands = [lo, hi]
    for i in rising:
        for j in falling:
            cands.append((w[i] * f[i] + w[j] * f[j]) / (w[i] + w[j]))
    best_c = cands[0]
    best_v = _objective(w, f, best_c)
    for c in cands[1:]:
        v = _objective(w, f, c)
        if v < best_v:
            best_c = c
            best_v = v
    return float(best_c), float(best_v), it


def moreau_coords(x_in, f_in, double lam):
    x_arr = np.ascontiguousarray(x_in, dtype=np.float64)
    if x_arr.ndim == 1:
        x_arr = x_arr[:, None]
    cdef const double[:, ::1] x = x_arr
    cdef const double[::1] f = np.ascontiguousarray(f_in, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], d = x.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double scale = 1.0 / (2.0 * lam)
    cdef double best, s, t
    with nogil:
        for i in range(n):
            best = 0.0
            for j in range(n):
                s = 0.0
                for k in range(d):
                    t = x[i, k] - x[j, k]
                    s = s + t * t
                t = f[j] + s * scale
                if j == 0 or t < best:
                    best = t
            out[i] = best
    return out_arr


def moreau_dist(dist_in, f_in, double lam):
    cdef const double[:, ::1] dist = np.ascontiguousarray(dist_in, dtype=np.float64)
    cdef const double[::1] f = np.ascontiguousarray(f_in, dtype=np.float64)
    cdef Py_ssize_t n = dist.shape[0], m = f.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double scale = 1.0 / (2.0 * lam)
    cdef double best, t
    with nogil:
        for i in range(n):
            best = 0.0
            for j in range(m):
                t = f[j] + dist[i, j] * dist[i, j] * scale
                if j == 0 or t < best:
                    best = t
            out[i] = best
    return out_arr


cdef Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t a) nogil:
    cdef Py_ssize_t root = a, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


def components(Py_ssize_t n, eu_in, ev_in, mask_in):
    cdef const cnp.int64_t[::1] eu = np.ascontiguousarray(eu_in, dtype=np.int64)
    cdef const cnp.int64_t[::1] ev = np.ascontiguousarray(ev_in, dtype=np.int64)
    cdef const cnp.uint8_t[::1] mask = np.ascontiguousarray(mask_in, dtype=np.uint8)
    parent_arr = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    labels_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    root_label_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] root_label = root_label_arr
    cdef Py_ssize_t e, a, b, ra, rb, v, r
    cdef cnp.int64_t next_label = 0
    with nogil:
        for e in range(eu.shape[0]):
            a = eu[e]
            b = ev[e]
            if not (mask[a] and mask[b]):
                continue
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
        for v in range(n):
            if not mask[v]:
                continue
            r = _find(parent, v)
            if root_label[r] < 0:
                root_label[r] = next_label
                next_label += 1
            labels[v] = root_label[r]
    return labels_arr
