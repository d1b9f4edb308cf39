# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: split search, tree prediction, simulation stepping.

Kept numerically interchangeable with the ``pure`` module: split quality is
computed from integer class counts with the identical float expression
(compiled with fp-contract off), so both backends grow identical trees.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


def best_split(x, y):
    """Best Gini split of one feature column; see ``pure.best_split``."""
    order = np.argsort(x, kind="stable")
    xs = np.ascontiguousarray(np.asarray(x, dtype=np.float64)[order])
    ys = np.ascontiguousarray(np.asarray(y, dtype=np.int64)[order])
    return _best_split_sorted(xs, ys)


cdef _best_split_sorted(double[::1] xs, cnp.int64_t[::1] ys):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i
    cdef long long n1 = 0
    cdef long long c1 = 0
    for i in range(n):
        n1 += ys[i]
    cdef double nf = <double> n
    cdef double n1f = <double> n1
    cdef double gp = 2.0 * (n1f / nf) * ((nf - n1f) / nf)
    cdef double best = 0.0
    cdef double best_thr = 0.0
    cdef double nl, n1l, nr, n1r, gl, gr, dec
    cdef bint found = False
    for i in range(n - 1):
        c1 += ys[i]
        if xs[i] < xs[i + 1]:
            nl = <double> (i + 1)
            n1l = <double> c1
            nr = nf - nl
            n1r = n1f - n1l
            gl = 2.0 * (n1l / nl) * ((nl - n1l) / nl)
            gr = 2.0 * (n1r / nr) * ((nr - n1r) / nr)
            dec = gp - (nl / nf) * gl - (nr / nf) * gr
            if (not found) or dec > best:
                found = True
                best = dec
                best_thr = (xs[i] + xs[i + 1]) * 0.5
    if not found:
        return None
    return best, best_thr


def eval_threshold(x, y, double thr):
    """Gini decrease of a fixed threshold; -inf if one side is empty."""
    xs = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    ys = np.ascontiguousarray(np.asarray(y, dtype=np.int64))
    return _eval_threshold(xs, ys, thr)


cdef double _eval_threshold(double[::1] xs, cnp.int64_t[::1] ys, double thr):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i
    cdef long long nl_i = 0
    cdef long long n1l_i = 0
    cdef long long n1_i = 0
    for i in range(n):
        n1_i += ys[i]
        if xs[i] <= thr:
            nl_i += 1
            n1l_i += ys[i]
    if nl_i == 0 or nl_i == n:
        return -np.inf
    cdef double nf = <double> n
    cdef double n1f = <double> n1_i
    cdef double nl = <double> nl_i
    cdef double n1l = <double> n1l_i
    cdef double nr = nf - nl
    cdef double n1r = n1f - n1l
    cdef double gp = 2.0 * (n1f / nf) * ((nf - n1f) / nf)
    cdef double gl = 2.0 * (n1l / nl) * ((nl - n1l) / nl)
    cdef double gr = 2.0 * (n1r / nr) * ((nr - n1r) / nr)
    return gp - (nl / nf) * gl - (nr / nf) * gr


def predict_tree(feature, threshold, left, right, value, X):
    """Route samples through an array-encoded tree (feature[i] < 0 marks leaves)."""
    cdef cnp.int32_t[::1] fv = feature
    cdef double[::1] tv = threshold
    cdef cnp.int32_t[::1] lv = left
    cdef cnp.int32_t[::1] rv = right
    cdef cnp.int32_t[::1] vv = value
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] xm = Xc
    cdef Py_ssize_t m = xm.shape[0]
    out = np.empty(m, dtype=np.int32)
    cdef cnp.int32_t[::1] ov = out
    cdef Py_ssize_t i
    cdef int node
    for i in range(m):
        node = 0
        while fv[node] >= 0:
            if xm[i, fv[node]] <= tv[node]:
                node = lv[node]
            else:
                node = rv[node]
        ov[i] = vv[node]
    return out


def simulate_path(indptr, indices, data, double c, b, double k, double alpha,
                  demands, p0, noise=None):
    """Unroll p <- c*(W p) + b - k*d^alpha over the demand rows."""
    cdef cnp.int32_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef cnp.int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef double[::1] w = np.ascontiguousarray(data, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, ::1] D = np.ascontiguousarray(demands, dtype=np.float64)
    cdef Py_ssize_t steps = D.shape[0]
    cdef Py_ssize_t n = D.shape[1]
    out = np.empty((steps, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    p_arr = np.array(p0, dtype=np.float64)
    pn_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] p = p_arr
    cdef double[::1] pn = pn_arr
    cdef double[:, ::1] nz
    cdef bint has_noise = noise is not None
    if has_noise:
        nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t t, v
    cdef cnp.int32_t j
    cdef double acc
    cdef bint linear = alpha == 1.0
    for t in range(steps):
        for v in range(n):
            acc = 0.0
            for j in range(ip[v], ip[v + 1]):
                acc += w[j] * p[ix[j]]
            if linear:
                pn[v] = c * acc + bv[v] - k * D[t, v]
            else:
                pn[v] = c * acc + bv[v] - k * (D[t, v] ** alpha)
        if has_noise:
            for v in range(n):
                pn[v] = pn[v] + nz[t, v]
        for v in range(n):
            p[v] = pn[v]
            ov[t, v] = pn[v]
    return out
