"""Window partitioning and the sort-and-weigh rule of windowed kernel pooling."""

import numpy as np


def window_partition(doc_length, size, stride):
    """Half-open column ranges of width ``size`` every ``stride`` columns.

    The last window is clipped to the document end and the walk stops once a
    window reaches it, so every column is covered.

    >>> window_partition(100, 50, 25)
    [(0, 50), (25, 75), (50, 100)]
    """
    if size < 1 or stride < 1:
        raise ValueError("window size and stride must be >= 1")
    if stride > size:
        raise ValueError(f"stride {stride} larger than window size {size} would leave gaps")
    if doc_length < 1:
        raise ValueError("doc_length must be >= 1")
    out = []
    start = 0
    while True:
        end = min(start + size, doc_length)
        out.append((start, end))
        if end >= doc_length:
            return out
        start += stride


def document_windows(doc_length, wconfig):
    """All windows of every configured size for one document, in size order."""
    out = []
    for size, stride in zip(wconfig.sizes, wconfig.strides):
        out.extend(window_partition(doc_length, size, stride))
    return out


def window_arrays(doc_lengths, wconfig):
    """Padded ``(starts, ends, valid)`` arrays of shape ``(B, W)`` for a batch."""
    per_doc = [document_windows(int(n), wconfig) for n in doc_lengths]
    width = max(len(w) for w in per_doc)
    starts = np.zeros((len(per_doc), width), dtype=np.int64)
    ends = np.zeros_like(starts)
    valid = np.zeros(starts.shape, dtype=bool)
    for b, windows in enumerate(per_doc):
        for w, (s, e) in enumerate(windows):
            starts[b, w], ends[b, w], valid[b, w] = s, e, True
    return starts, ends, valid


def rank_order(window_scores, valid, top_r):
    """Indices of the ``top_r`` best windows per row (descending, ties by position).

    Returns ``(index, present)``; ``present`` is False for ranks beyond the
    number of valid windows.
    """
    scores = np.where(valid, window_scores, -np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")
    r = min(top_r, order.shape[1])
    index = np.zeros((scores.shape[0], top_r), dtype=np.int64)
    index[:, :r] = order[:, :r]
    present = np.arange(top_r)[None, :] < valid.sum(axis=1)[:, None]
    return index, present


def rank_weighted_sum(window_scores, weights):
    """Sort scores descending and weigh them by rank; missing ranks contribute 0.

    >>> rank_weighted_sum([2.0, 5.0], [1.0, 0.5])
    6.0
    """
    ordered = sorted((float(s) for s in window_scores), reverse=True)
    return float(sum(w * s for w, s in zip(weights, ordered)))
