# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled greedy scheduling kernel; same contract as ``_fallback.greedy_batch``."""

import numpy as np

from libc.math cimport sqrt, INFINITY, NAN


cdef inline double complex _cdot(double complex[::1] a, double complex[::1] b, Py_ssize_t n) nogil:
    # a b^H
    cdef double complex acc = 0
    cdef Py_ssize_t i
    for i in range(n):
        acc = acc + a[i] * b[i].conjugate()
    return acc


def greedy_batch(hhat, num, den, double tol=1e-12, omega_all=None):
    cdef double complex[:, :, ::1] H = np.ascontiguousarray(hhat, dtype=np.complex128)
    cdef double[:, ::1] NUM = np.ascontiguousarray(num, dtype=np.float64)
    cdef double[:, ::1] DEN = np.ascontiguousarray(den, dtype=np.float64)
    cdef Py_ssize_t T = H.shape[0], K = H.shape[1], nT = H.shape[2]

    sel_a = np.zeros((T, nT), dtype=np.int64)
    omega_a = np.zeros((T, nT), dtype=np.float64)
    gamma_a = np.zeros((T, nT), dtype=np.float64)
    basis_a = np.zeros((T, nT, nT), dtype=np.complex128)
    status_a = np.zeros(T, dtype=np.int64)
    cdef long long[:, ::1] sel = sel_a
    cdef double[:, ::1] omega = omega_a
    cdef double[:, ::1] gamma = gamma_a
    cdef double complex[:, :, ::1] basis = basis_a
    cdef long long[::1] status = status_a

    cdef bint record = omega_all is not None
    cdef double[:, :, :] OM
    if record:
        OM = omega_all

    cdef double complex[:, ::1] xi = np.empty((K, nT), dtype=np.complex128)
    cdef double[::1] wk = np.empty(K, dtype=np.float64)
    cdef double[::1] ratio = np.empty(K, dtype=np.float64)
    cdef char[::1] active = np.empty(K, dtype=np.int8)
    cdef double complex[::1] v = np.empty(nT, dtype=np.complex128)
    cdef double complex[::1] q = np.empty(nT, dtype=np.complex128)

    cdef Py_ssize_t t, k, n, i, j, best
    cdef double m, bestm, w, vn, tol2 = tol * tol
    cdef double complex c

    with nogil:
        for t in range(T):
            for k in range(K):
                for i in range(nT):
                    xi[k, i] = H[t, k, i]
                wk[k] = 1.0
                ratio[k] = NUM[t, k] / DEN[t, k]
                active[k] = 1
            for n in range(nT):
                if record:
                    for k in range(K):
                        OM[t, n, k] = wk[k] if active[k] else NAN
                best = -1
                bestm = -INFINITY
                for k in range(K):
                    if active[k]:
                        m = ratio[k] * wk[k]
                        if m > bestm or best < 0:
                            bestm = m
                            best = k
                sel[t, n] = best
                w = wk[best]
                omega[t, n] = w
                gamma[t, n] = bestm
                active[best] = 0
                if w < tol2:
                    status[t] = n + 1
                    break
                for i in range(nT):
                    v[i] = xi[best, i]
                for j in range(n):
                    c = _cdot(v, basis[t, j], nT)
                    for i in range(nT):
                        v[i] = v[i] - c * basis[t, j, i]
                vn = 0.0
                for i in range(nT):
                    vn = vn + v[i].real * v[i].real + v[i].imag * v[i].imag
                vn = sqrt(vn)
                for i in range(nT):
                    q[i] = v[i] / vn
                    basis[t, n, i] = q[i]
                if n == nT - 1:
                    break
                for k in range(K):
                    if not active[k]:
                        continue
                    c = 0
                    for i in range(nT):
                        c = c + xi[k, i] * q[i].conjugate()
                    w = 0.0
                    for i in range(nT):
                        xi[k, i] = xi[k, i] - c * q[i]
                        w = w + xi[k, i].real * xi[k, i].real + xi[k, i].imag * xi[k, i].imag
                    wk[k] = w
    return sel_a, omega_a, gamma_a, basis_a, status_a
