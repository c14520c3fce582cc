# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot loops; see _fallback for the contract."""

import numpy as np

cimport cython

ctypedef double complex c128
ctypedef long long i64

cdef i64 HALF = 1 << 29
cdef i64 MASK = (1 << 30) - 1
cdef i64 RAW_MIN = -(<i64>1 << 31)
cdef i64 RAW_MAX = (<i64>1 << 31) - 1


cdef inline Py_ssize_t _low_index(Py_ssize_t p, int target) nogil:
    # p-th basis index whose target bit is 0
    return ((p >> target) << (target + 1)) | (p & ((<Py_ssize_t>1 << target) - 1))


def apply_kernel_inplace(c128[:, ::1] mat, int target, int control,
                         c128 k00, c128 k01, c128 k10, c128 k11,
                         bint deriv=False):
    # explicit real arithmetic, product-grouped: (k*a) + (k*b) with each
    # multiply and add rounded separately, matching the fallback bit for bit
    cdef Py_ssize_t d = mat.shape[0]
    cdef Py_ssize_t cols = mat.shape[1]
    cdef Py_ssize_t half = d >> 1
    cdef Py_ssize_t p, i0, i1, j, o0, o1
    cdef double k00r = k00.real, k00i = k00.imag
    cdef double k01r = k01.real, k01i = k01.imag
    cdef double k10r = k10.real, k10i = k10.imag
    cdef double k11r = k11.real, k11i = k11.imag
    cdef double ar, ai, br, bi
    cdef double* dp = <double*> &mat[0, 0]
    with nogil:
        for p in range(half):
            i0 = _low_index(p, target)
            i1 = i0 | (<Py_ssize_t>1 << target)
            if control >= 0 and not ((i0 >> control) & 1):
                if deriv:
                    for j in range(cols):
                        mat[i0, j] = 0
                        mat[i1, j] = 0
                continue
            o0 = 2 * i0 * cols
            o1 = 2 * i1 * cols
            for j in range(cols):
                ar = dp[o0 + 2 * j]
                ai = dp[o0 + 2 * j + 1]
                br = dp[o1 + 2 * j]
                bi = dp[o1 + 2 * j + 1]
                dp[o0 + 2 * j] = (k00r * ar - k00i * ai) + (k01r * br - k01i * bi)
                dp[o0 + 2 * j + 1] = (k00r * ai + k00i * ar) + (k01r * bi + k01i * br)
                dp[o1 + 2 * j] = (k10r * ar - k10i * ai) + (k11r * br - k11i * bi)
                dp[o1 + 2 * j + 1] = (k10r * ai + k10i * ar) + (k11r * bi + k11i * br)


def trace_compensated(c128[:, ::1] mat):
    cdef Py_ssize_t d = mat.shape[0]
    cdef Py_ssize_t i
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0, y, t
    cdef c128 z
    with nogil:
        for i in range(d):
            z = mat[i, i]
            y = z.real - cr
            t = sr + y
            cr = (t - sr) - y
            sr = t
            y = z.imag - ci
            t = si + y
            ci = (t - si) - y
            si = t
    return complex(sr, si)


def dot_trace(c128[:, ::1] a, c128[:, ::1] x):
    # serial accumulation in flat order; explicit products as in the fallback
    cdef Py_ssize_t d0 = a.shape[0]
    cdef Py_ssize_t d1 = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double ar, ai, xr, xi
    cdef double sr = 0.0, si = 0.0
    with nogil:
        for i in range(d0):
            for j in range(d1):
                ar = a[i, j].real
                ai = a[i, j].imag
                xr = x[i, j].real
                xi = x[i, j].imag
                sr = sr + (ar * xr - ai * xi)
                si = si + (ar * xi + ai * xr)
    return complex(sr, si)


cdef inline i64 _round_even_30(i64 v) nogil:
    cdef i64 f = v >> 30
    cdef i64 r = v & MASK
    if r > HALF:
        return f + 1
    if r == HALF:
        return f + (f & 1)
    return f


cdef inline i64 _saturate(i64 q, bint* flag) nogil:
    if q > RAW_MAX:
        flag[0] = True
        return RAW_MAX
    if q < RAW_MIN:
        flag[0] = True
        return RAW_MIN
    return q


def fx_apply_kernel_inplace(i64[:, ::1] re, i64[:, ::1] im, int target,
                            int control, i64[::1] kraw, bint deriv=False):
    cdef Py_ssize_t d = re.shape[0]
    cdef Py_ssize_t cols = re.shape[1]
    cdef Py_ssize_t half = d >> 1
    cdef Py_ssize_t p, i0, i1, j
    cdef i64 kr0 = kraw[0], ki0 = kraw[1], kr1 = kraw[2], ki1 = kraw[3]
    cdef i64 kr2 = kraw[4], ki2 = kraw[5], kr3 = kraw[6], ki3 = kraw[7]
    cdef i64 ar, ai, br, bi, t1, t2
    cdef i64 re_lo, im_lo, re_hi, im_hi
    cdef bint saturated = False
    with nogil:
        for p in range(half):
            i0 = _low_index(p, target)
            i1 = i0 | (<Py_ssize_t>1 << target)
            if control >= 0 and not ((i0 >> control) & 1):
                if deriv:
                    for j in range(cols):
                        re[i0, j] = 0
                        im[i0, j] = 0
                        re[i1, j] = 0
                        im[i1, j] = 0
                continue
            for j in range(cols):
                ar = re[i0, j]
                ai = im[i0, j]
                br = re[i1, j]
                bi = im[i1, j]
                # row 0: k00*a + k01*b (Knuth 3M per product, one rounding)
                t1 = kr0 * ar
                t2 = ki0 * ai
                re_lo = t1 - t2
                im_lo = (kr0 + ki0) * (ar + ai) - t1 - t2
                t1 = kr1 * br
                t2 = ki1 * bi
                re_lo = re_lo + (t1 - t2)
                im_lo = im_lo + ((kr1 + ki1) * (br + bi) - t1 - t2)
                # row 1: k10*a + k11*b
                t1 = kr2 * ar
                t2 = ki2 * ai
                re_hi = t1 - t2
                im_hi = (kr2 + ki2) * (ar + ai) - t1 - t2
                t1 = kr3 * br
                t2 = ki3 * bi
                re_hi = re_hi + (t1 - t2)
                im_hi = im_hi + ((kr3 + ki3) * (br + bi) - t1 - t2)
                re[i0, j] = _saturate(_round_even_30(re_lo), &saturated)
                im[i0, j] = _saturate(_round_even_30(im_lo), &saturated)
                re[i1, j] = _saturate(_round_even_30(re_hi), &saturated)
                im[i1, j] = _saturate(_round_even_30(im_hi), &saturated)
    return saturated


def fx_trace(i64[:, ::1] re, i64[:, ::1] im):
    cdef Py_ssize_t d = re.shape[0]
    cdef Py_ssize_t i
    cdef i64 sr = 0, si = 0
    with nogil:
        for i in range(d):
            sr = sr + re[i, i]
            si = si + im[i, i]
    return sr, si
