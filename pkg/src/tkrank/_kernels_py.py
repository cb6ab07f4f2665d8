"""Pure numpy implementations of the hot loops.

Used when the compiled ``_kernels`` extension is unavailable or when
``TKRANK_PURE_PYTHON=1`` is set. Signatures match ``_kernels.pyx`` exactly.
"""

import numpy as np


def _window_membership(starts, ends, n):
    cols = np.arange(n)[None, :, None]
    return ((cols >= starts[:, None, :]) & (cols < ends[:, None, :])).astype(np.float64)


def rbf_transform(M, mask, mus, sigma):
    """Gaussian kernel activations ``(B, K, m, n)``; cells with mask 0 are exactly 0."""
    diff = M[:, None, :, :] - mus[None, :, None, None]
    return np.exp(-(diff * diff) / (2.0 * sigma * sigma)) * mask[:, None, :, :]


def rbf_window_pool(M, mask, mus, sigma, starts, ends):
    """Sum kernel activations over document columns inside each window.

    Returns an array of shape ``(B, K, m, W)`` where window ``w`` of batch
    item ``b`` covers columns ``[starts[b, w], ends[b, w])``.
    """
    K = rbf_transform(M, mask, mus, sigma)
    member = _window_membership(starts, ends, M.shape[2])
    return np.matmul(K, member[:, None, :, :])


def rbf_window_pool_grad(M, mask, mus, sigma, starts, ends, grad_out):
    K = rbf_transform(M, mask, mus, sigma)
    dK = K * (-(M[:, None, :, :] - mus[None, :, None, None]) / (sigma * sigma))
    member = _window_membership(starts, ends, M.shape[2])
    g = np.matmul(grad_out, np.swapaxes(member, 1, 2)[:, None, :, :])
    return np.sum(g * dK, axis=1)


def bm25_accumulate(scores, docs, tfs, doc_lens, idf, k1, b, avgdl):
    """Add one query term's BM25 contribution for every posting, in place."""
    dl = doc_lens[docs]
    scores[docs] += idf * tfs * (k1 + 1.0) / (tfs + k1 * (1.0 - b + b * dl / avgdl))
