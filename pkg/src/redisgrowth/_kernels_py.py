"""Pure numpy trajectory kernel, vectorised across runs.

Used when the compiled extension is unavailable or REDISGROWTH_PURE is set.
"""

import numpy as np


def _fee_rows(h, target):
    n = h.shape[1]
    s = np.sort(h, axis=1)
    below = np.cumsum(s, axis=1) - s  # sum of the k smallest, k = 0..n-1
    cand = (target[:, None] - below) / (n - np.arange(n))
    ok = cand <= s
    k = np.argmax(ok, axis=1)
    rows = np.arange(h.shape[0])
    return np.where(ok.any(axis=1), cand[rows, k], s[:, -1])


def _threshold_rows(h, target):
    n = h.shape[1]
    d = -np.sort(-h, axis=1)
    above = np.cumsum(d, axis=1)
    cand = (above - target[:, None]) / np.arange(1, n + 1)
    nxt = np.concatenate([d[:, 1:], np.zeros((h.shape[0], 1))], axis=1)
    ok = cand >= nxt
    k = np.argmax(ok, axis=1)
    rows = np.arange(h.shape[0])
    m = np.where(ok.any(axis=1), cand[rows, k], 0.0)
    return np.maximum(m, 0.0)


def simulate_totals(draws, scheme: int, a: float, b: float):
    """See ``_kernels.simulate_totals``."""
    d = np.asarray(draws, dtype=np.float64)
    S, n, T = d.shape
    if n < 1 or T < 1:
        raise ValueError("need N >= 1 and T >= 1")
    out_y = np.empty((S, T))
    out_h = np.empty((S, T))
    out_y[:, 0] = n
    out_h[:, 0] = n
    y = np.ones((S, n))
    for t in range(1, T):
        h = y * d[:, :, t]
        total = h.sum(axis=1)
        out_h[:, t] = total
        live = total > 0.0
        if scheme == 0:
            tax = a * h
        elif scheme == 1:
            fee = _fee_rows(h, a * total) if a > 0.0 else np.zeros(S)
            tax = np.minimum(h, fee[:, None])
        else:
            c = _threshold_rows(h, a * total)
            tax = np.maximum(h - c[:, None], 0.0)
        tax[~live] = 0.0
        share = (1.0 - b) * tax.sum(axis=1) / n
        y = h - tax + share[:, None]
        out_y[:, t] = y.sum(axis=1)
    return out_y, out_h
