# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as :mod:`dropcal._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, ceil

cnp.import_array()

cdef double LOG_FLOOR = log(1e-300)


def bin_index(values, Py_ssize_t m):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], i, k
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef double x
    for i in range(n):
        x = v[i]
        k = <Py_ssize_t>ceil(x * m) - 1
        if k < 0:
            k = 0
        elif k > m - 1:
            k = m - 1
        if k < m - 1 and x > (k + 1) / <double>m:
            k += 1
        elif k > 0 and x <= k / <double>m:
            k -= 1
        o[i] = k
    return out


def bin_sums(idx, values, flags, Py_ssize_t m):
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] f = np.ascontiguousarray(flags, dtype=np.float64)
    counts = np.zeros(m, dtype=np.int64)
    sum_values = np.zeros(m, dtype=np.float64)
    sum_flags = np.zeros(m, dtype=np.float64)
    cdef cnp.int64_t[::1] c = counts
    cdef double[::1] sv = sum_values
    cdef double[::1] sf = sum_flags
    cdef Py_ssize_t i, k
    for i in range(ix.shape[0]):
        k = ix[i]
        c[k] += 1
        sv[k] += v[i]
        sf[k] += f[i]
    return counts, sum_values, sum_flags


def mc_integrate_batch(logits, double t):
    cdef const double[:, :, ::1] z = np.ascontiguousarray(logits, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], npass = z.shape[1], nc = z.shape[2]
    cdef Py_ssize_t j, i, c
    out = np.zeros((n, nc), dtype=np.float64)
    cdef double[:, ::1] p = out
    buf = np.empty(nc, dtype=np.float64)
    cdef double[::1] e = buf
    cdef double zmax, total
    for j in range(n):
        for i in range(npass):
            zmax = z[j, i, 0]
            for c in range(1, nc):
                if z[j, i, c] > zmax:
                    zmax = z[j, i, c]
            total = 0.0
            for c in range(nc):
                e[c] = exp((z[j, i, c] - zmax) / t)
                total += e[c]
            for c in range(nc):
                p[j, c] += e[c] / total
        for c in range(nc):
            p[j, c] /= npass
    return out


def mc_nll_grad(logits, labels, double t):
    cdef const double[:, :, ::1] z = np.ascontiguousarray(logits, dtype=np.float64)
    cdef const cnp.int64_t[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = z.shape[0], npass = z.shape[1], nc = z.shape[2]
    cdef Py_ssize_t j, i, c, lab
    a_buf = np.empty(npass, dtype=np.float64)
    g_buf = np.empty(npass, dtype=np.float64)
    cdef double[::1] a = a_buf
    cdef double[::1] g = g_buf
    cdef double zmax, total, ez, lse, top, acc, dacc, log_p, w
    cdef double nll = 0.0, grad = 0.0
    cdef double t2 = t * t
    cdef double log_n = log(<double>npass)
    for j in range(n):
        lab = y[j]
        for i in range(npass):
            zmax = z[j, i, 0]
            for c in range(1, nc):
                if z[j, i, c] > zmax:
                    zmax = z[j, i, c]
            total = 0.0
            ez = 0.0
            for c in range(nc):
                w = exp((z[j, i, c] - zmax) / t)
                total += w
                ez += w * (z[j, i, c] - zmax)
            lse = log(total)
            a[i] = (z[j, i, lab] - zmax) / t - lse
            g[i] = -((z[j, i, lab] - zmax) - ez / total) / t2
        top = a[0]
        for i in range(1, npass):
            if a[i] > top:
                top = a[i]
        acc = 0.0
        dacc = 0.0
        for i in range(npass):
            w = exp(a[i] - top)
            acc += w
            dacc += w * g[i]
        log_p = top + log(acc) - log_n
        if log_p < LOG_FLOOR:
            nll -= LOG_FLOOR
        else:
            nll -= log_p
            grad -= dacc / acc
    return nll, grad
