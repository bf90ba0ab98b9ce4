# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Mirrors _kernels_py.py operation for operation; both backends must produce
bit-identical output (same accumulation order, libm exp/log, no FMA
contraction flags in setup.py). Keep the two files in sync.
"""

import numpy as np

from libc.math cimport exp, log, INFINITY


cdef extern from "Python.h":
    const char* PyUnicode_AsUTF8AndSize(object, Py_ssize_t*) except NULL


cdef inline unsigned long long _fnv1a(const unsigned char* data, Py_ssize_t n) noexcept:
    cdef unsigned long long h = 0xCBF29CE484222325ULL
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ <unsigned long long>data[i]) * 0x100000001B3ULL
    return h


def hash_token(token):
    """FNV-1a 64-bit hash of the token's UTF-8 bytes."""
    cdef Py_ssize_t n = 0
    cdef const char* s = PyUnicode_AsUTF8AndSize(token, &n)
    return _fnv1a(<const unsigned char*>s, n)


def featurize(tokens, long long dim, bint signed):
    """Hash tokens into a sparse (indices, values) pair. See _kernels_py."""
    cdef dict acc = {}
    cdef unsigned long long h
    cdef long long bucket
    cdef long long mask = dim - 1
    cdef Py_ssize_t n = 0
    cdef const char* s
    for token in tokens:
        s = PyUnicode_AsUTF8AndSize(token, &n)
        h = _fnv1a(<const unsigned char*>s, n)
        bucket = <long long>(h & <unsigned long long>mask)
        if signed and (h >> 63):
            acc[bucket] = acc.get(bucket, 0.0) - 1.0
        else:
            acc[bucket] = acc.get(bucket, 0.0) + 1.0
    items = sorted((f, v) for f, v in acc.items() if v != 0.0)
    cdef long long[::1] idx = np.empty(len(items), dtype=np.int64)
    cdef double[::1] val = np.empty(len(items), dtype=np.float64)
    cdef Py_ssize_t j
    for j in range(len(items)):
        idx[j] = items[j][0]
        val[j] = items[j][1]
    return np.asarray(idx), np.asarray(val)


def nb_accumulate(list indices, list values, const long long[::1] labels,
                  const double[::1] sample_w, long long c, long long dim):
    """Weighted count accumulation for multinomial naive Bayes."""
    class_w_arr = np.zeros(c, dtype=np.float64)
    feat_w_arr = np.zeros((c, dim), dtype=np.float64)
    cdef double[::1] class_w = class_w_arr
    cdef double[:, ::1] feat_w = feat_w_arr
    cdef Py_ssize_t i, j
    cdef long long y
    cdef double wi
    cdef const long long[::1] idx
    cdef const double[::1] val
    for i in range(labels.shape[0]):
        y = labels[i]
        wi = sample_w[i]
        class_w[y] += wi
        idx = indices[i]
        val = values[i]
        for j in range(idx.shape[0]):
            feat_w[y, idx[j]] += wi * val[j]
    return class_w_arr, feat_w_arr


def sgd_epoch(double[:, ::1] W, double[::1] b, const long long[::1] order,
              list indices, list values, const long long[::1] labels,
              const double[::1] sample_w, double lr, double l2):
    """One epoch of weighted softmax-regression SGD, in place."""
    cdef long long c = W.shape[0]
    cdef double lrl2 = lr * l2
    cdef double total_loss = 0.0
    z_arr = np.zeros(c, dtype=np.float64)
    p_arr = np.zeros(c, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[::1] p = p_arr
    cdef Py_ssize_t t, j
    cdef long long i, y, k, f, nnz
    cdef double wi, s, m, e, py, coef, g, gk
    cdef const long long[::1] idx
    cdef const double[::1] val
    for t in range(order.shape[0]):
        i = order[t]
        idx = indices[i]
        val = values[i]
        y = labels[i]
        wi = sample_w[i]
        nnz = idx.shape[0]
        for k in range(c):
            s = b[k]
            for j in range(nnz):
                s += W[k, idx[j]] * val[j]
            z[k] = s
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            e = exp(z[k] - m)
            p[k] = e
            s += e
        for k in range(c):
            p[k] /= s
        py = p[y]
        if py < 1e-15:
            py = 1e-15
        total_loss += wi * -log(py)
        coef = lr * wi
        for k in range(c):
            g = p[k]
            if k == y:
                g -= 1.0
            gk = coef * g
            b[k] -= gk
            for j in range(nnz):
                f = idx[j]
                W[k, f] -= gk * val[j] + lrl2 * W[k, f]
    return total_loss


def stump_scan(list indices, const long long[::1] labels,
               const double[::1] sample_w, long long c):
    """Exhaustive search for the best single-feature presence rule."""
    cdef Py_ssize_t n = labels.shape[0]
    total_arr = np.zeros(c, dtype=np.float64)
    cdef double[::1] total = total_arr
    cdef dict present = {}
    cdef Py_ssize_t i, j
    cdef long long y, k
    cdef double wi
    cdef const long long[::1] idx
    cdef double[::1] mass
    for i in range(n):
        y = labels[i]
        wi = sample_w[i]
        total[y] += wi
        idx = indices[i]
        for j in range(idx.shape[0]):
            obj = present.get(idx[j])
            if obj is None:
                obj = np.zeros(c, dtype=np.float64)
                present[idx[j]] = obj
            mass = obj
            mass[y] += wi
    cdef long long best_f = -1
    cdef long long best_a = 0
    cdef long long best_b = 0
    cdef double best_err = INFINITY
    cdef long long a, b_cls
    cdef double pm_sum, am_sum, am_best, pm_best, am_k, err
    cdef double[::1] pm
    for f in sorted(present):
        pm = present[f]
        a = 0
        b_cls = 0
        pm_sum = 0.0
        am_sum = 0.0
        am_best = total[0] - pm[0]
        pm_best = pm[0]
        for k in range(c):
            am_k = total[k] - pm[k]
            pm_sum += pm[k]
            am_sum += am_k
            if pm[k] > pm_best:
                pm_best = pm[k]
                a = k
            if am_k > am_best:
                am_best = am_k
                b_cls = k
        err = (pm_sum - pm_best) + (am_sum - am_best)
        if err < best_err:
            best_err = err
            best_f = f
            best_a = a
            best_b = b_cls
    return best_f, best_a, best_b, best_err
