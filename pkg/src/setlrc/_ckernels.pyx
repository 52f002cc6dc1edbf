# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``setlrc._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, rint

cnp.import_array()


def box_downsample(img, Py_ssize_t a, Py_ssize_t b):
    cdef const double[:, :] src = np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    out_arr = np.empty((a, b), dtype=np.float64)
    cdef double[:, :] out = out_arr
    cdef Py_ssize_t i, k, j, l, j0, j1, l0, l1
    cdef long lo_i, hi_i, lo_k, hi_k, ov_r, ov_c, s_lo, s_hi
    cdef double acc, row_acc
    cdef double denom = <double>(h * w)
    for i in range(a):
        lo_i = i * h
        hi_i = lo_i + h
        j0 = lo_i // a
        j1 = (hi_i + a - 1) // a
        for k in range(b):
            lo_k = k * w
            hi_k = lo_k + w
            l0 = lo_k // b
            l1 = (hi_k + b - 1) // b
            acc = 0.0
            for j in range(j0, j1):
                s_lo = j * a
                s_hi = s_lo + a
                ov_r = (hi_i if hi_i < s_hi else s_hi) - (lo_i if lo_i > s_lo else s_lo)
                if ov_r <= 0:
                    continue
                row_acc = 0.0
                for l in range(l0, l1):
                    s_lo = l * b
                    s_hi = s_lo + b
                    ov_c = (hi_k if hi_k < s_hi else s_hi) - (lo_k if lo_k > s_lo else s_lo)
                    if ov_c > 0:
                        row_acc += ov_c * src[j, l]
                acc += ov_r * row_acc
            out[i, k] = acc / denom
    return out_arr


def equalize_levels(levels):
    cdef cnp.ndarray flat_arr = np.ascontiguousarray(levels, dtype=np.intp).ravel()
    cdef const Py_ssize_t[:] flat = flat_arr
    cdef Py_ssize_t n = flat.shape[0], i
    cdef long hist[256]
    cdef double lut[256]
    cdef long cdf = 0, cdf_min = 0
    for i in range(256):
        hist[i] = 0
    for i in range(n):
        hist[flat[i]] += 1
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[:] out = out_arr
    for i in range(256):
        if hist[i] > 0:
            cdf_min = hist[i]
            break
    if cdf_min == n:
        return out_arr.reshape(np.shape(levels))
    for i in range(256):
        cdf += hist[i]
        lut[i] = rint((cdf - cdf_min) / <double>(n - cdf_min) * 255.0)
    for i in range(n):
        out[i] = lut[flat[i]]
    return out_arr.reshape(np.shape(levels))


def residual_norms(X, X_hat):
    cdef const double[:, :] x = np.asarray(X, dtype=np.float64)
    cdef const double[:, :] xh = np.asarray(X_hat, dtype=np.float64)
    cdef Py_ssize_t t = x.shape[0], m = x.shape[1], i, j
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, d
    if x.strides[1] == sizeof(double) and xh.strides[1] == sizeof(double):
        # row-major: walk memory in order, one running sum per column
        for i in range(t):
            for j in range(m):
                d = x[i, j] - xh[i, j]
                out[j] += d * d
        for j in range(m):
            out[j] = sqrt(out[j])
        return out_arr
    for j in range(m):
        acc = 0.0
        for i in range(t):
            d = x[i, j] - xh[i, j]
            acc += d * d
        out[j] = sqrt(acc)
    return out_arr


def accumulate_exp(distances, double alpha):
    cdef const double[:, :] d = np.ascontiguousarray(distances, dtype=np.float64)
    cdef Py_ssize_t c = d.shape[0], m = d.shape[1], i, j
    theta_arr = np.empty((c, m), dtype=np.float64)
    Theta_arr = np.zeros(c, dtype=np.float64)
    cdef double[:, :] theta = theta_arr
    cdef double[:] Theta = Theta_arr
    cdef double w
    for i in range(c):
        for j in range(m):
            w = exp(-alpha * d[i, j])
            theta[i, j] = w
            Theta[i] += w
    return theta_arr, Theta_arr
