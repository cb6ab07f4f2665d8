# cython: language_level=3
"""Compiled hot loops: windowed RBF kernel pooling and BM25 posting accumulation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def rbf_transform(double[:, :, ::1] M, double[:, :, ::1] mask, double[::1] mus, double sigma):
    cdef Py_ssize_t B = M.shape[0], m = M.shape[1], n = M.shape[2], K = mus.shape[0]
    out = np.zeros((B, K, m, n), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t b, k, i, j
    cdef double d
    for b in range(B):
        for k in range(K):
            for i in range(m):
                for j in range(n):
                    if mask[b, i, j] != 0.0:
                        d = M[b, i, j] - mus[k]
                        o[b, k, i, j] = exp(-(d * d) * inv) * mask[b, i, j]
    return out


def rbf_window_pool(double[:, :, ::1] M, double[:, :, ::1] mask, double[::1] mus, double sigma,
                    long long[:, ::1] starts, long long[:, ::1] ends):
    cdef Py_ssize_t B = M.shape[0], m = M.shape[1], n = M.shape[2], K = mus.shape[0]
    cdef Py_ssize_t W = starts.shape[1]
    out = np.zeros((B, K, m, W), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef double[:, ::1] buf = np.zeros((K, n), dtype=np.float64)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t b, k, i, j, w
    cdef double d, acc
    for b in range(B):
        for i in range(m):
            for j in range(n):
                if mask[b, i, j] != 0.0:
                    for k in range(K):
                        d = M[b, i, j] - mus[k]
                        buf[k, j] = exp(-(d * d) * inv) * mask[b, i, j]
                else:
                    for k in range(K):
                        buf[k, j] = 0.0
            for w in range(W):
                for k in range(K):
                    acc = 0.0
                    for j in range(starts[b, w], ends[b, w]):
                        acc += buf[k, j]
                    o[b, k, i, w] = acc
    return out


def rbf_window_pool_grad(double[:, :, ::1] M, double[:, :, ::1] mask, double[::1] mus, double sigma,
                         long long[:, ::1] starts, long long[:, ::1] ends,
                         double[:, :, :, ::1] grad_out):
    cdef Py_ssize_t B = M.shape[0], m = M.shape[1], n = M.shape[2], K = mus.shape[0]
    cdef Py_ssize_t W = starts.shape[1]
    grad = np.zeros((B, m, n), dtype=np.float64)
    cdef double[:, :, ::1] g = grad
    cdef double[:, ::1] buf = np.zeros((K, n), dtype=np.float64)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef double inv2 = 1.0 / (sigma * sigma)
    cdef Py_ssize_t b, k, i, j, w
    cdef double d, gw
    for b in range(B):
        for i in range(m):
            for j in range(n):
                if mask[b, i, j] != 0.0:
                    for k in range(K):
                        d = M[b, i, j] - mus[k]
                        buf[k, j] = exp(-(d * d) * inv) * mask[b, i, j] * (-d * inv2)
                else:
                    for k in range(K):
                        buf[k, j] = 0.0
            for w in range(W):
                for k in range(K):
                    gw = grad_out[b, k, i, w]
                    if gw == 0.0:
                        continue
                    for j in range(starts[b, w], ends[b, w]):
                        g[b, i, j] += gw * buf[k, j]
    return grad


def bm25_accumulate(double[::1] scores, long long[::1] docs, double[::1] tfs, double[::1] doc_lens,
                    double idf, double k1, double b, double avgdl):
    cdef Py_ssize_t p
    cdef long long d
    cdef double tf
    for p in range(docs.shape[0]):
        d = docs[p]
        tf = tfs[p]
        scores[d] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_lens[d] / avgdl))
