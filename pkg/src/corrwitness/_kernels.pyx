# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Both functions mirror ``corrwitness._pykernels`` exactly in signature and
semantics; see that module for the reference formulation.
"""
import numpy as np

cimport cython
from libc.math cimport cos, sin, log

# lower-triangular (row, col) positions of the six complex off-diagonal entries
cdef int[6] OFF_ROW = [1, 2, 2, 3, 3, 3]
cdef int[6] OFF_COL = [0, 0, 1, 0, 1, 2]


def coherence_sweep(const double[::1] weights, const double[::1] offsets,
                    const double[::1] slopes, const double[::1] phase):
    cdef Py_ssize_t npix = weights.shape[0]
    cdef Py_ssize_t nslope = slopes.shape[0]
    cdef Py_ssize_t j, n
    cdef double re, im, arg, s
    out = np.empty(nslope, dtype=np.complex128)
    cdef double complex[::1] res = out
    for j in range(nslope):
        s = slopes[j]
        re = 0.0
        im = 0.0
        for n in range(npix):
            arg = s * offsets[n] + phase[n]
            re += weights[n] * cos(arg)
            im += weights[n] * sin(arg)
        res[j] = re + 1j * im
    return out


def loglik_grad(const double[::1] params, const double complex[:, ::1] kets,
                const double[::1] counts, const double[::1] totals,
                const double[::1] logref, double floor):
    cdef Py_ssize_t K = kets.shape[0]
    cdef Py_ssize_t k, i, j, m
    cdef double complex T[4][4]
    cdef double complex G[4][4]
    cdef double complex u[4]
    cdef double s = 0.0, q, p, w, value = 0.0, wp = 0.0

    for i in range(4):
        for j in range(4):
            T[i][j] = 0.0
            G[i][j] = 0.0
    for i in range(4):
        T[i][i] = params[i]
    for m in range(6):
        T[OFF_ROW[m]][OFF_COL[m]] = params[4 + 2 * m] + 1j * params[5 + 2 * m]
    for i in range(4):
        for j in range(i + 1):
            s += T[i][j].real * T[i][j].real + T[i][j].imag * T[i][j].imag

    grad_out = np.zeros(16, dtype=np.float64)
    if s <= 0.0:
        return -np.inf, grad_out
    cdef double[::1] grad = grad_out

    for k in range(K):
        q = 0.0
        for i in range(4):
            u[i] = 0.0
            for j in range(i + 1):
                u[i] = u[i] + T[i][j] * kets[k, j]
            q += u[i].real * u[i].real + u[i].imag * u[i].imag
        p = q / s
        if p > floor:
            value += counts[k] * (log(p) - logref[k]) - totals[k] * p + counts[k]
            w = counts[k] / p - totals[k]
        else:
            value += counts[k] * (log(floor) - logref[k]) - totals[k] * p + counts[k]
            w = -totals[k]
        wp += w * p
        for i in range(4):
            for j in range(i + 1):
                G[i][j] = G[i][j] + w * u[i] * kets[k, j].conjugate()

    for i in range(4):
        for j in range(i + 1):
            G[i][j] = (G[i][j] - wp * T[i][j]) / s
    for i in range(4):
        grad[i] = 2.0 * G[i][i].real
    for m in range(6):
        grad[4 + 2 * m] = 2.0 * G[OFF_ROW[m]][OFF_COL[m]].real
        grad[5 + 2 * m] = 2.0 * G[OFF_ROW[m]][OFF_COL[m]].imag
    return value, grad_out
