# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled batched jet log-determinant kernel.

Mirrors tzsoliton.core.fallback.logdet_jets: order-(2,2) Taylor jets are
carried through an LU factorization with partial pivoting on the constant
coefficient.  Jets live in 9-element contiguous blocks (row-major (3,3)).
The heavy loop runs without the GIL so caller-side thread pools scale.
"""
import numpy as np

from libc.math cimport atan2, hypot, isfinite, log, M_PI, NAN

ctypedef double complex dc

cdef dc IUNIT = 1j


cdef inline double cmag(dc z) nogil:
    return hypot(z.real, z.imag)


cdef inline dc clog_c(dc z) nogil:
    return log(cmag(z)) + IUNIT * atan2(z.imag, z.real)


cdef inline void jmul(const dc *a, const dc *b, dc *out) nogil:
    cdef int i, j, p, q
    cdef dc acc
    for i in range(3):
        for j in range(3):
            acc = 0
            for p in range(i + 1):
                for q in range(j + 1):
                    acc = acc + a[3 * p + q] * b[3 * (i - p) + (j - q)]
            out[3 * i + j] = acc


cdef inline void jsplit(const dc *a, dc *w) nogil:
    # w = a / a[0] with the constant part zeroed
    cdef int m
    cdef dc c = a[0]
    for m in range(9):
        w[m] = a[m] / c
    w[0] = 0


cdef inline void jlog(const dc *a, dc *out) nogil:
    cdef dc w[9]
    cdef dc w2[9]
    cdef dc w3[9]
    cdef dc w4[9]
    cdef int m
    jsplit(a, w)
    jmul(w, w, w2)
    jmul(w2, w, w3)
    jmul(w3, w, w4)
    for m in range(9):
        out[m] = w[m] - w2[m] / 2.0 + w3[m] / 3.0 - w4[m] / 4.0
    out[0] = clog_c(a[0])


cdef inline void jinv(const dc *a, dc *out) nogil:
    cdef dc w[9]
    cdef dc w2[9]
    cdef dc w3[9]
    cdef dc w4[9]
    cdef int m
    cdef dc c = a[0]
    jsplit(a, w)
    jmul(w, w, w2)
    jmul(w2, w, w3)
    jmul(w3, w, w4)
    for m in range(9):
        out[m] = (-w[m] + w2[m] - w3[m] + w4[m]) / c
    out[0] = 1.0 / c


cdef void _logdet_one(dc[:, :, :, ::1] a, Py_ssize_t n, dc *out) nogil:
    cdef Py_ssize_t k, r, c, piv
    cdef int m, swaps = 0
    cdef double best, mag
    cdef dc invp[9]
    cdef dc fac[9]
    cdef dc tmp[9]
    cdef dc lg[9]
    cdef dc swp
    cdef dc *row_r
    cdef dc *row_k
    for m in range(9):
        out[m] = 0
    for k in range(n):
        piv = k
        best = cmag(a[k, k, 0, 0])
        for r in range(k + 1, n):
            mag = cmag(a[r, k, 0, 0])
            if not isfinite(mag):
                best = -1
                break
            if mag > best:
                best = mag
                piv = r
        if best <= 0 or not isfinite(best):
            for m in range(9):
                out[m] = NAN + IUNIT * NAN
            return
        if piv != k:
            for c in range(n):
                row_r = &a[piv, c, 0, 0]
                row_k = &a[k, c, 0, 0]
                for m in range(9):
                    swp = row_k[m]
                    row_k[m] = row_r[m]
                    row_r[m] = swp
            swaps += 1
        jlog(&a[k, k, 0, 0], lg)
        for m in range(9):
            out[m] = out[m] + lg[m]
        if k + 1 < n:
            jinv(&a[k, k, 0, 0], invp)
            for r in range(k + 1, n):
                jmul(&a[r, k, 0, 0], invp, fac)
                for c in range(k + 1, n):
                    jmul(fac, &a[k, c, 0, 0], tmp)
                    row_r = &a[r, c, 0, 0]
                    for m in range(9):
                        row_r[m] = row_r[m] - tmp[m]
    if swaps % 2:
        out[0] = out[0] + IUNIT * M_PI


def logdet_jets(mats):
    """Jet of log det for a (B, n, n, 3, 3) batch; see the fallback docstring."""
    arr = np.array(mats, dtype=np.complex128, copy=True, order="C")
    if arr.ndim != 5 or arr.shape[1] != arr.shape[2] or arr.shape[3:] != (3, 3):
        raise ValueError("expected a (B, n, n, 3, 3) jet-matrix batch")
    out = np.zeros((arr.shape[0], 3, 3), dtype=np.complex128)
    if arr.shape[0] == 0:
        return out
    cdef dc[:, :, :, :, ::1] m = arr
    cdef dc[:, :, ::1] o = out
    cdef Py_ssize_t b, B = arr.shape[0], n = arr.shape[1]
    with nogil:
        for b in range(B):
            _logdet_one(m[b], n, &o[b, 0, 0])
    return out
