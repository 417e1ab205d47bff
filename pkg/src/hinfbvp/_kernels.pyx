# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled exponential sweep kernel (see ``_kernels_py`` for the contract)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)

cdef double SERIES_CUT = 0.5
DEF NTERMS = 18
# C[m][k] = 1 / (k! (k + m + 1)): Taylor coefficients of the three moments
cdef double C[3][NTERMS]


cdef void _init_coeffs():
    cdef int m, k
    cdef double fact
    for m in range(3):
        fact = 1.0
        for k in range(NTERMS):
            if k:
                fact *= k
            C[m][k] = 1.0 / (fact * (k + m + 1))


_init_coeffs()


cdef inline double complex _phi(double complex z, double complex *e1, double complex *e2,
                                double complex *e3) noexcept nogil:
    """Moments of exp(-z s) against 1, s, s^2 on [0, 1]; returns exp(-z)."""
    cdef double complex ez, s1, s2, s3, iz
    cdef int k
    ez = cexp(-z)
    if cabs(z) < SERIES_CUT:
        s1 = C[0][NTERMS - 1]
        s2 = C[1][NTERMS - 1]
        s3 = C[2][NTERMS - 1]
        for k in range(NTERMS - 2, -1, -1):
            s1 = s1 * (-z) + C[0][k]
            s2 = s2 * (-z) + C[1][k]
            s3 = s3 * (-z) + C[2][k]
        e1[0] = s1
        e2[0] = s2
        e3[0] = s3
    else:
        iz = 1.0 / z
        e1[0] = (1.0 - ez) * iz
        e2[0] = (1.0 - (1.0 + z) * ez) * iz * iz
        e3[0] = (2.0 - (2.0 + 2.0 * z + z * z) * ez) * iz * iz * iz
    return ez


def exp_sweeps(kplus, kminus, x, f, bub):
    cdef double complex[::1] kp = np.ascontiguousarray(kplus, dtype=np.complex128)
    cdef double complex[::1] km = np.ascontiguousarray(kminus, dtype=np.complex128)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double complex[:, ::1] fv = np.ascontiguousarray(f, dtype=np.complex128)
    cdef double complex[:, ::1] bv = np.ascontiguousarray(bub, dtype=np.complex128)
    cdef Py_ssize_t K = fv.shape[0]
    cdef Py_ssize_t M = fv.shape[1]
    F = np.zeros((K, M), dtype=np.complex128)
    B = np.zeros((K, M), dtype=np.complex128)
    cdef double complex[:, ::1] Fv = F
    cdef double complex[:, ::1] Bv = B
    cdef Py_ssize_t k, i
    cdef double h
    cdef double complex z, e1, e2, e3, ez
    if M < 2:
        return F, B
    with nogil:
        for k in range(K):
            for i in range(M - 1):
                h = xv[i + 1] - xv[i]
                z = kp[k] * h
                ez = _phi(z, &e1, &e2, &e3)
                Fv[k, i + 1] = ez * Fv[k, i] + h * (
                    fv[k, i + 1] * (e1 - e2) + fv[k, i] * e2 + bv[k, i] * (e2 - e3))
            for i in range(M - 2, -1, -1):
                h = xv[i + 1] - xv[i]
                z = km[k] * h
                ez = _phi(z, &e1, &e2, &e3)
                Bv[k, i] = ez * Bv[k, i + 1] + h * (
                    fv[k, i] * (e1 - e2) + fv[k, i + 1] * e2 + bv[k, i] * (e2 - e3))
    return F, B
