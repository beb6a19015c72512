# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled im2col/col2im (the hot gather/scatter of every convolution).

NHWC layout; the channel axis is innermost and contiguous, so each patch row
copies kh*kw short contiguous runs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef fused real:
    float
    double

BACKEND = "cython"


def out_size(Py_ssize_t size, Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    return (size + 2 * pad - k) // stride + 1


def im2col(real[:, :, :, ::1] x, int kh, int kw, int stride, int pad):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t ho = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - kw) // stride + 1
    if real is float:
        cols_arr = np.zeros((n * ho * wo, kh * kw * c), dtype=np.float32)
    else:
        cols_arr = np.zeros((n * ho * wo, kh * kw * c), dtype=np.float64)
    cdef real[:, ::1] cols = cols_arr
    cdef Py_ssize_t ni, oi, oj, ki, kj, ci, ii, jj, row, col0
    for ni in range(n):
        for oi in range(ho):
            for oj in range(wo):
                row = (ni * ho + oi) * wo + oj
                for ki in range(kh):
                    ii = oi * stride + ki - pad
                    if ii < 0 or ii >= h:
                        continue
                    for kj in range(kw):
                        jj = oj * stride + kj - pad
                        if jj < 0 or jj >= w:
                            continue
                        col0 = (ki * kw + kj) * c
                        for ci in range(c):
                            cols[row, col0 + ci] = x[ni, ii, jj, ci]
    return cols_arr


def col2im(real[:, ::1] gcols, Py_ssize_t n, Py_ssize_t h, Py_ssize_t w,
           Py_ssize_t c, int kh, int kw, int stride, int pad):
    cdef Py_ssize_t ho = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - kw) // stride + 1
    if real is float:
        gx_arr = np.zeros((n, h, w, c), dtype=np.float32)
    else:
        gx_arr = np.zeros((n, h, w, c), dtype=np.float64)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t ni, oi, oj, ki, kj, ci, ii, jj, row, col0
    for ni in range(n):
        for oi in range(ho):
            for oj in range(wo):
                row = (ni * ho + oi) * wo + oj
                for ki in range(kh):
                    ii = oi * stride + ki - pad
                    if ii < 0 or ii >= h:
                        continue
                    for kj in range(kw):
                        jj = oj * stride + kj - pad
                        if jj < 0 or jj >= w:
                            continue
                        col0 = (ki * kw + kj) * c
                        for ci in range(c):
                            gx[ni, ii, jj, ci] += gcols[row, col0 + ci]
    return gx_arr
