# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernel.

Same contract as ``_kernels_py.simulate_totals``; runs without the GIL so
sweep worker threads overlap.
"""

from libc.stdlib cimport malloc, free

import numpy as np


cdef inline double _pivot(double* v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    # median of first, middle, last
    cdef double x = v[lo], y = v[lo + (hi - lo) // 2], z = v[hi - 1]
    if x > y:
        x, y = y, x
    if y > z:
        y = z
    return x if x > y else y


cdef inline Py_ssize_t _split(double* v, Py_ssize_t lo, Py_ssize_t hi, double p,
                              bint strict) noexcept nogil:
    # branchless Lomuto: moves v < p (or v <= p if not strict) to the front
    cdef Py_ssize_t i, a = lo
    cdef double x
    for i in range(lo, hi):
        x = v[i]
        v[i] = v[a]
        v[a] = x
        a += (x < p) if strict else (x <= p)
    return a


cdef double _fee(double* v, Py_ssize_t n, double target) noexcept nogil:
    """Smallest f with sum(min(v_i, f)) == target; v is scrambled."""
    cdef Py_ssize_t lo = 0, hi = n, lt, le, i
    cdef double below = 0.0, sl, p, vmax = v[0]
    cdef Py_ssize_t above = 0
    for i in range(n):
        vmax = v[i] if v[i] > vmax else vmax
    while lo < hi:
        p = _pivot(v, lo, hi)
        lt = _split(v, lo, hi, p, True)
        sl = 0.0
        for i in range(lo, lt):
            sl += v[i]
        if below + sl + p * (above + hi - lt) >= target:
            above += hi - lt
            hi = lt
        else:
            le = _split(v, lt, hi, p, False)
            below += sl + p * (le - lt)
            lo = le
    if above == 0:
        return vmax
    return (target - below) / above


cdef double _threshold(double* v, Py_ssize_t n, double target) noexcept nogil:
    """Largest m >= 0 with sum(max(v_i - m, 0)) == target; v is scrambled."""
    cdef Py_ssize_t lo = 0, hi = n, lt, i
    cdef double top = 0.0, sg, p, m
    cdef Py_ssize_t above = 0
    while lo < hi:
        p = _pivot(v, lo, hi)
        lt = _split(v, lo, hi, p, True)
        sg = 0.0
        for i in range(lt, hi):
            sg += v[i]
        if top + sg - p * (above + hi - lt) <= target:
            top += sg
            above += hi - lt
            hi = lt
        else:
            lo = _split(v, lt, hi, p, False)
    m = (top - target) / above
    return m if m > 0.0 else 0.0


cdef void _run(const double[:, ::1] draws, int scheme, double a, double b,
               double* y, double* h, double* buf,
               double[::1] out_y, double[::1] out_h) noexcept nogil:
    cdef Py_ssize_t n = draws.shape[0]
    cdef Py_ssize_t T = draws.shape[1]
    cdef Py_ssize_t i, t
    cdef double total, collected, tax, c, share, ysum

    for i in range(n):
        y[i] = 1.0
    out_y[0] = <double>n
    out_h[0] = <double>n

    for t in range(1, T):
        total = 0.0
        for i in range(n):
            h[i] = y[i] * draws[i, t]
            total += h[i]
        out_h[t] = total

        c = 0.0
        if total > 0.0 and scheme != 0:
            for i in range(n):
                buf[i] = h[i]
            if scheme == 1:
                c = _fee(buf, n, a * total) if a > 0.0 else 0.0
            else:
                c = _threshold(buf, n, a * total)

        collected = 0.0
        for i in range(n):
            if total <= 0.0:
                tax = 0.0
            elif scheme == 0:
                tax = a * h[i]
            elif scheme == 1:
                tax = h[i] if h[i] < c else c
            else:
                tax = h[i] - c if h[i] > c else 0.0
            y[i] = h[i] - tax
            collected += tax

        share = (1.0 - b) * collected / n
        ysum = 0.0
        for i in range(n):
            y[i] += share
            ysum += y[i]
        out_y[t] = ysum


def simulate_totals(draws, int scheme, double a, double b):
    """Total income and pre-redistribution totals for a batch of runs.

    draws: array (S, N, T) of growth factors; column t drives step t, column 0
    is unused. Returns (Y, H), each (S, T), with Y[:, 0] == H[:, 0] == N.
    """
    cdef const double[:, :, ::1] d = np.ascontiguousarray(draws, dtype=np.float64)
    cdef Py_ssize_t S = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    cdef Py_ssize_t T = d.shape[2]
    if n < 1 or T < 1:
        raise ValueError("need N >= 1 and T >= 1")
    out_y_arr = np.empty((S, T), dtype=np.float64)
    out_h_arr = np.empty((S, T), dtype=np.float64)
    cdef double[:, ::1] oy = out_y_arr
    cdef double[:, ::1] oh = out_h_arr
    cdef double* y = <double*>malloc(3 * n * sizeof(double))
    if y == NULL:
        raise MemoryError()
    cdef Py_ssize_t s
    try:
        with nogil:
            for s in range(S):
                _run(d[s], scheme, a, b, y, y + n, y + 2 * n, oy[s], oh[s])
    finally:
        free(y)
    return out_y_arr, out_h_arr
