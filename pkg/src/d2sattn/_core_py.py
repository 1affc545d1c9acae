"""Pure-numpy kernel implementations (fallback backend).

Same signatures as the compiled extension `_core`. All float arrays are
C-contiguous float64; token ids are int64. `offsets` frames chunk j as
ids_flat[offsets[j]:offsets[j+1]]. Masked chunk columns are the trailing
columns >= n_valid and stay exactly zero in outputs and gradients.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def encode_doc_fwd(emb, proj, bias, ids_flat, offsets, n_total):
    """Mean-pool + affine + tanh per chunk. Returns (xmean (k,h), dmat (h,n_total))."""
    h = emb.shape[1]
    k = len(offsets) - 1
    xmean = np.empty((k, h))
    for j in range(k):
        xmean[j] = emb[ids_flat[offsets[j] : offsets[j + 1]]].mean(axis=0)
    dmat = np.zeros((h, n_total))
    dmat[:, :k] = np.tanh(xmean @ proj.T + bias).T
    return xmean, dmat


def encode_doc_bwd(proj, ids_flat, offsets, xmean, dmat, d_dmat, demb, dproj, dbias):
    """Accumulate encoder gradients given upstream d_dmat (h,n)."""
    k = len(offsets) - 1
    tanh_out = dmat[:, :k].T
    dt = d_dmat[:, :k].T * (1.0 - tanh_out * tanh_out)  # (k,h)
    dbias += dt.sum(axis=0)
    dproj += dt.T @ xmean
    dx = dt @ proj  # row j = proj^T . dt_j
    for j in range(k):
        ids_j = ids_flat[offsets[j] : offsets[j + 1]]
        np.add.at(demb, ids_j, dx[j] / len(ids_j))


def sac_fwd(dmat, n_valid, s, w, bias):
    """Attention head forward. Returns (logits (n,c), alpha (c,n), lvec (c,h), scores (c,))."""
    h, n = dmat.shape
    c = s.shape[1]
    k = n_valid
    dv = dmat[:, :k]
    z = np.tanh(dv.T @ s)  # (k,c)
    e = np.exp(z - z.max(axis=0))
    alpha_v = (e / e.sum(axis=0)).T  # (c,k), rows sum to 1
    logits = np.zeros((n, c))
    logits[:k] = z
    alpha = np.zeros((c, n))
    alpha[:, :k] = alpha_v
    lvec = alpha_v @ dv.T  # (c,h)
    scores = _sigmoid((w * lvec).sum(axis=1) + bias)
    return logits, alpha, lvec, scores


def sac_bwd(dmat, n_valid, s, w, logits, alpha, lvec, scores, dscores, ds, dw, dbias):
    """Attention head backward; accumulates (ds, dw, dbias), returns d_dmat (h,n)."""
    k = n_valid
    dv = dmat[:, :k]
    alpha_v = alpha[:, :k]
    dz_lin = dscores * scores * (1.0 - scores)  # (c,)
    dbias += dz_lin
    dw += dz_lin[:, None] * lvec
    dl = dz_lin[:, None] * w  # (c,h)

    d_dmat = np.zeros_like(dmat)
    d_dmat[:, :k] += dl.T @ alpha_v  # path through the weighted sum
    dalpha = dl @ dv  # (c,k)
    row_dot = (alpha_v * dalpha).sum(axis=1)
    dlogit = (alpha_v * (dalpha - row_dot[:, None])).T  # (k,c) softmax backward
    zv = logits[:k]
    dy = dlogit * (1.0 - zv * zv)
    ds += dv @ dy
    d_dmat[:, :k] += s @ dy.T  # path through the attention logits
    return d_dmat


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """In-place Adam step on flat views; bias corrections bc1/bc2 precomputed."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
