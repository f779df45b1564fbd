# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the orbit and window kernels.

Signatures and semantics match ``_pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, log1p, floor, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


def sine_orbit(double x0, long long c0, Py_ssize_t n, double omega, double K):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fracs = np.empty(n + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(n + 1, dtype=np.int64)
    cdef double a = K / TWO_PI
    cdef double f = x0
    cdef double fl = floor(f)
    cdef long long c = c0
    cdef Py_ssize_t i
    f -= fl
    c += <long long>fl
    for i in range(n + 1):
        fracs[i] = f
        counts[i] = c
        f = f + omega - a * sin(TWO_PI * f)
        fl = floor(f)
        f -= fl
        c += <long long>fl
    return fracs, counts


def sine_lift_batch(x, Py_ssize_t n, double omega, double K):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xin = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t m = xin.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fout = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cout = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ldout = np.empty(m, dtype=np.float64)
    cdef double a = K / TWO_PI
    cdef double f, fl, s, ld
    cdef long long c
    cdef Py_ssize_t j, i
    for j in range(m):
        f = xin[j]
        fl = floor(f)
        f -= fl
        c = <long long>fl
        ld = 0.0
        for i in range(n):
            s = TWO_PI * f
            if K != 0.0:
                ld += log1p(-K * cos(s))
            f = f + omega - a * sin(s)
            fl = floor(f)
            f -= fl
            c += <long long>fl
        fout[j] = f
        cout[j] = c
        ldout[j] = ld
    shape = np.shape(x)
    return fout.reshape(shape), cout.reshape(shape), ldout.reshape(shape)


def window_oscillation(xs, ys, hs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.ascontiguousarray(hs, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(h.shape[0], dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qmax = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] qmin = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t m, i, right, hmax, tmax, hmin, tmin
    cdef double width, best, osc
    for m in range(h.shape[0]):
        width = h[m]
        best = 0.0
        hmax = 0
        tmax = 0
        hmin = 0
        tmin = 0
        right = 0
        for i in range(n):
            # extend the window to the right edge x[i] + width
            while right < n and x[right] <= x[i] + width:
                while tmax > hmax and y[qmax[tmax - 1]] <= y[right]:
                    tmax -= 1
                qmax[tmax] = right
                tmax += 1
                while tmin > hmin and y[qmin[tmin - 1]] >= y[right]:
                    tmin -= 1
                qmin[tmin] = right
                tmin += 1
                right += 1
            # drop indices left of i
            while qmax[hmax] < i:
                hmax += 1
            while qmin[hmin] < i:
                hmin += 1
            osc = y[qmax[hmax]] - y[qmin[hmin]]
            if osc > best:
                best = osc
        out[m] = best
    return out
