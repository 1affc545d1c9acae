# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations (hot path).

Mirror of `_core_py`: same signatures, same math, plain C loops. Float arrays
are C-contiguous float64, ids int64; chunk j spans
ids_flat[offsets[j]:offsets[j+1]].
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt, tanh

cnp.import_array()

BACKEND_NAME = "compiled"


def encode_doc_fwd(double[:, ::1] emb, double[:, ::1] proj, double[::1] bias,
                   cnp.int64_t[::1] ids_flat, cnp.int64_t[::1] offsets, int n_total):
    cdef int h = emb.shape[1]
    cdef int k = offsets.shape[0] - 1
    xmean_arr = np.empty((k, h))
    dmat_arr = np.zeros((h, n_total))
    cdef double[:, ::1] xmean = xmean_arr
    cdef double[:, ::1] dmat = dmat_arr
    cdef int j, a, b
    cdef cnp.int64_t t, lo, hi
    cdef double acc, inv_len, u
    for j in range(k):
        lo = offsets[j]
        hi = offsets[j + 1]
        inv_len = 1.0 / <double>(hi - lo)
        for a in range(h):
            acc = 0.0
            for t in range(lo, hi):
                acc += emb[ids_flat[t], a]
            xmean[j, a] = acc * inv_len
    for j in range(k):
        for a in range(h):
            u = bias[a]
            for b in range(h):
                u += proj[a, b] * xmean[j, b]
            dmat[a, j] = tanh(u)
    return xmean_arr, dmat_arr


def encode_doc_bwd(double[:, ::1] proj, cnp.int64_t[::1] ids_flat, cnp.int64_t[::1] offsets,
                   double[:, ::1] xmean, double[:, ::1] dmat, double[:, ::1] d_dmat,
                   double[:, ::1] demb, double[:, ::1] dproj, double[::1] dbias):
    cdef int h = proj.shape[0]
    cdef int k = offsets.shape[0] - 1
    cdef int j, a, b
    cdef cnp.int64_t t, lo, hi
    cdef double inv_len, g
    dt_arr = np.empty(h)
    dx_arr = np.empty(h)
    cdef double[::1] dt = dt_arr
    cdef double[::1] dx = dx_arr
    for j in range(k):
        for a in range(h):
            g = d_dmat[a, j] * (1.0 - dmat[a, j] * dmat[a, j])
            dt[a] = g
            dbias[a] += g
        for a in range(h):
            g = dt[a]
            for b in range(h):
                dproj[a, b] += g * xmean[j, b]
        for b in range(h):
            g = 0.0
            for a in range(h):
                g += proj[a, b] * dt[a]
            dx[b] = g
        lo = offsets[j]
        hi = offsets[j + 1]
        inv_len = 1.0 / <double>(hi - lo)
        for t in range(lo, hi):
            for a in range(h):
                demb[ids_flat[t], a] += dx[a] * inv_len


def sac_fwd(double[:, ::1] dmat, int n_valid, double[:, ::1] s, double[:, ::1] w,
            double[::1] bias):
    cdef int h = dmat.shape[0]
    cdef int n = dmat.shape[1]
    cdef int c = s.shape[1]
    cdef int k = n_valid
    logits_arr = np.zeros((n, c))
    alpha_arr = np.zeros((c, n))
    lvec_arr = np.zeros((c, h))
    scores_arr = np.empty(c)
    cdef double[:, ::1] logits = logits_arr
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, ::1] lvec = lvec_arr
    cdef double[::1] scores = scores_arr
    cdef int i, j, a
    cdef double acc, mx, tot, z
    for j in range(k):
        for i in range(c):
            acc = 0.0
            for a in range(h):
                acc += dmat[a, j] * s[a, i]
            logits[j, i] = tanh(acc)
    for i in range(c):
        mx = logits[0, i]
        for j in range(1, k):
            if logits[j, i] > mx:
                mx = logits[j, i]
        tot = 0.0
        for j in range(k):
            acc = exp(logits[j, i] - mx)
            alpha[i, j] = acc
            tot += acc
        for j in range(k):
            alpha[i, j] /= tot
    for i in range(c):
        for a in range(h):
            acc = 0.0
            for j in range(k):
                acc += alpha[i, j] * dmat[a, j]
            lvec[i, a] = acc
    for i in range(c):
        z = bias[i]
        for a in range(h):
            z += w[i, a] * lvec[i, a]
        if z >= 0.0:
            scores[i] = 1.0 / (1.0 + exp(-z))
        else:
            acc = exp(z)
            scores[i] = acc / (1.0 + acc)
    return logits_arr, alpha_arr, lvec_arr, scores_arr


def sac_bwd(double[:, ::1] dmat, int n_valid, double[:, ::1] s, double[:, ::1] w,
            double[:, ::1] logits, double[:, ::1] alpha, double[:, ::1] lvec,
            double[::1] scores, double[::1] dscores,
            double[:, ::1] ds, double[:, ::1] dw, double[::1] dbias):
    cdef int h = dmat.shape[0]
    cdef int n = dmat.shape[1]
    cdef int c = s.shape[1]
    cdef int k = n_valid
    d_dmat_arr = np.zeros((h, n))
    cdef double[:, ::1] d_dmat = d_dmat_arr
    dz_arr = np.empty(c)
    dl_arr = np.empty((c, h))
    dalpha_arr = np.empty((c, k))
    dy_arr = np.empty((k, c))
    cdef double[::1] dz = dz_arr
    cdef double[:, ::1] dl = dl_arr
    cdef double[:, ::1] dalpha = dalpha_arr
    cdef double[:, ::1] dy = dy_arr
    cdef int i, j, a
    cdef double g, row, zv
    for i in range(c):
        g = dscores[i] * scores[i] * (1.0 - scores[i])
        dz[i] = g
        dbias[i] += g
        for a in range(h):
            dw[i, a] += g * lvec[i, a]
            dl[i, a] = g * w[i, a]
    # path through the attention-weighted sum
    for j in range(k):
        for a in range(h):
            g = 0.0
            for i in range(c):
                g += alpha[i, j] * dl[i, a]
            d_dmat[a, j] += g
    # softmax + tanh backward on the attention logits
    for i in range(c):
        row = 0.0
        for j in range(k):
            g = 0.0
            for a in range(h):
                g += dl[i, a] * dmat[a, j]
            dalpha[i, j] = g
            row += alpha[i, j] * g
        for j in range(k):
            zv = logits[j, i]
            dy[j, i] = alpha[i, j] * (dalpha[i, j] - row) * (1.0 - zv * zv)
    for a in range(h):
        for i in range(c):
            g = 0.0
            for j in range(k):
                g += dmat[a, j] * dy[j, i]
            ds[a, i] += g
    for j in range(k):
        for a in range(h):
            g = 0.0
            for i in range(c):
                g += s[a, i] * dy[j, i]
            d_dmat[a, j] += g
    return d_dmat_arr


def adam_update(double[::1] param, double[::1] grad, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, double bc1, double bc2):
    cdef Py_ssize_t i, size = param.shape[0]
    cdef double g
    for i in range(size):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
