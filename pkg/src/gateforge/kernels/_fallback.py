"""Pure-numpy implementation of the hot loops.

Semantics contract shared with the compiled backend ``_core``:

* ``apply_kernel_inplace``: column-wise 2x2 kernel application.  Basis index
  ``I`` pairs with ``J = I ^ (1 << target)``; the kernel row is selected by
  bit ``target`` of ``I``.  With a control wire, amplitudes whose control bit
  is 0 pass through unchanged -- or are zeroed in derivative mode, where the
  untouched subspace does not depend on the differentiated angle.
* fixed-point entry points operate on int64 arrays of raw values scaled by
  2^30, products are exact in 64 bits (Knuth 3-multiply form), each output
  component is rounded once (to nearest, ties to even) after the final
  summation, then saturated to the int32 range.
"""

import numpy as np

FRAC_BITS = 30
_HALF = 1 << (FRAC_BITS - 1)
_MASK = (1 << FRAC_BITS) - 1
RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1


def _pair_rows(d, target, control):
    idx = np.arange(d)
    low = idx[(idx >> target) & 1 == 0]
    if control >= 0:
        low = low[(low >> control) & 1 == 1]
    return low, low | (1 << target)


def apply_kernel_inplace(mat, target, control, k00, k01, k10, k11, deriv=False):
    # explicit real arithmetic, one ufunc per rounding step, in the exact
    # product-grouped order of the compiled core: bit-identical results
    d = mat.shape[0]
    i0, i1 = _pair_rows(d, target, control)
    flat = mat.view(np.float64)
    vr = flat[:, 0::2]
    vi = flat[:, 1::2]
    ar, ai = vr[i0, :], vi[i0, :]
    br, bi = vr[i1, :], vi[i1, :]
    k00r, k00i = k00.real, k00.imag
    k01r, k01i = k01.real, k01.imag
    k10r, k10i = k10.real, k10.imag
    k11r, k11i = k11.real, k11.imag
    vr[i0, :] = (k00r * ar - k00i * ai) + (k01r * br - k01i * bi)
    vi[i0, :] = (k00r * ai + k00i * ar) + (k01r * bi + k01i * br)
    vr[i1, :] = (k10r * ar - k10i * ai) + (k11r * br - k11i * bi)
    vi[i1, :] = (k10r * ai + k10i * ar) + (k11r * bi + k11i * br)
    if deriv and control >= 0:
        idx = np.arange(d)
        mat[idx[(idx >> control) & 1 == 0], :] = 0.0


def trace_compensated(mat):
    """Kahan-compensated sum of the diagonal, real and imaginary apart."""
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    diag = np.diagonal(mat)
    for z in diag:
        y = z.real - cr
        t = sr + y
        cr = (t - sr) - y
        sr = t
        y = z.imag - ci
        t = si + y
        ci = (t - si) - y
        si = t
    return complex(sr, si)


def dot_trace(a, x):
    """``sum(a * x)`` elementwise, no conjugation: Tr(A^T X).

    Serial flat-order accumulation; same rounding sequence as the core.
    """
    pr = (a.real * x.real - a.imag * x.imag).ravel().tolist()
    pi = (a.real * x.imag + a.imag * x.real).ravel().tolist()
    sr = 0.0
    si = 0.0
    for v in pr:
        sr += v
    for v in pi:
        si += v
    return complex(sr, si)


def _round_even_30(v):
    """Shift int64 values right by 30 fractional bits, ties to even."""
    f = v >> FRAC_BITS
    r = v & _MASK
    up = (r > _HALF) | ((r == _HALF) & ((f & 1) == 1))
    return f + up


def fx_apply_kernel_inplace(re, im, target, control, kraw, deriv=False):
    """Fixed-point column-wise kernel application; returns True on saturation.

    ``kraw`` holds the kernel as int64 raw parts
    ``[r00, i00, r01, i01, r10, i10, r11, i11]``.
    """
    d = re.shape[0]
    i0, i1 = _pair_rows(d, target, control)
    ar, ai = re[i0, :], im[i0, :]
    br, bi = re[i1, :], im[i1, :]
    saturated = False
    for rows, (kr0, ki0, kr1, ki1) in (
        (i0, (kraw[0], kraw[1], kraw[2], kraw[3])),
        (i1, (kraw[4], kraw[5], kraw[6], kraw[7])),
    ):
        # Knuth 3M form per product, exact in 64-bit, summed before rounding
        t1 = kr0 * ar
        t2 = ki0 * ai
        re64 = t1 - t2
        im64 = (kr0 + ki0) * (ar + ai) - t1 - t2
        t1 = kr1 * br
        t2 = ki1 * bi
        re64 = re64 + (t1 - t2)
        im64 = im64 + ((kr1 + ki1) * (br + bi) - t1 - t2)
        rq = _round_even_30(re64)
        iq = _round_even_30(im64)
        if (
            rq.min() < RAW_MIN or rq.max() > RAW_MAX
            or iq.min() < RAW_MIN or iq.max() > RAW_MAX
        ):
            saturated = True
            rq = np.clip(rq, RAW_MIN, RAW_MAX)
            iq = np.clip(iq, RAW_MIN, RAW_MAX)
        re[rows, :] = rq
        im[rows, :] = iq
    if deriv and control >= 0:
        idx = np.arange(d)
        off = idx[(idx >> control) & 1 == 0]
        re[off, :] = 0
        im[off, :] = 0
    return saturated


def fx_trace(re, im):
    """Exact integer sum of the raw diagonal; order-independent."""
    return int(np.trace(re)), int(np.trace(im))
