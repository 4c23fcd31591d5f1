"""Vectorized numpy implementations of the hot kernels.

This module is the reference fallback for :mod:`dropcal._ckernels`; both
expose the same four functions with the same argument conventions.
"""

import numpy as np

LOG_FLOOR = np.log(1e-300)


def bin_index(values, m):
    values = np.asarray(values, dtype=np.float64)
    k = np.ceil(values * m).astype(np.int64) - 1
    np.clip(k, 0, m - 1, out=k)
    # v*m may round across an edge; snap to the edges k/m exactly.
    up = (k < m - 1) & (values > (k + 1) / m)
    k[up] += 1
    down = (k > 0) & (values <= k / m)
    k[down] -= 1
    return k


def bin_sums(idx, values, flags, m):
    counts = np.bincount(idx, minlength=m).astype(np.int64)
    sum_values = np.bincount(idx, weights=values, minlength=m)
    sum_flags = np.bincount(idx, weights=flags, minlength=m)
    return counts, sum_values, sum_flags


def mc_integrate_batch(logits, t):
    """Mean over axis 1 of softmax(logits / t); logits has shape (n, N, C)."""
    shifted = (logits - logits.max(axis=-1, keepdims=True)) / t
    e = np.exp(shifted)
    e /= e.sum(axis=-1, keepdims=True)
    return e.mean(axis=1)


def mc_nll_grad(logits, labels, t):
    """Return (nll, d nll / d t) for the MC-integrated predictive at temperature t."""
    n, n_passes, _ = logits.shape
    shifted = logits - logits.max(axis=-1, keepdims=True)
    u = shifted / t
    lse = np.log(np.exp(u).sum(axis=-1))
    s = np.exp(u - lse[..., None])
    rows = np.arange(n)
    zy = shifted[rows, :, labels]
    log_sy = u[rows, :, labels] - lse
    dlog_sy = -(zy - (s * shifted).sum(axis=-1)) / (t * t)

    top = log_sy.max(axis=1, keepdims=True)
    a = np.exp(log_sy - top)
    total = a.sum(axis=1)
    log_p = top[:, 0] + np.log(total) - np.log(n_passes)
    dlog_p = (a * dlog_sy).sum(axis=1) / total
    floored = log_p < LOG_FLOOR
    log_p[floored] = LOG_FLOOR
    dlog_p[floored] = 0.0
    return -log_p.sum(), -dlog_p.sum()
