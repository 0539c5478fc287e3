# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-pixel kernels: bilinear warp and median reduction.

Mirrors glean.kernels.pyfallback exactly; built with -ffp-contract=off so
the float expression results match the NumPy fallback bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, rint
from libc.string cimport memset

cnp.import_array()


def warp_bilinear(src, inv_coeffs, int out_h, int out_w, fill):
    """See glean.kernels.pyfallback.warp_bilinear."""
    src_arr = np.ascontiguousarray(src, dtype=np.uint8)
    if src_arr.ndim != 3 or src_arr.shape[2] != 3:
        raise ValueError("source must be an (H, W, 3) raster")
    cdef const cnp.uint8_t[:, :, ::1] s = src_arr
    cdef double a = inv_coeffs[0]
    cdef double b = inv_coeffs[1]
    cdef double c = inv_coeffs[2]
    cdef double d = inv_coeffs[3]
    cdef double e = inv_coeffs[4]
    cdef double f = inv_coeffs[5]
    cdef cnp.uint8_t f0 = fill[0]
    cdef cnp.uint8_t f1 = fill[1]
    cdef cnp.uint8_t f2 = fill[2]
    cdef Py_ssize_t h = s.shape[0]
    cdef Py_ssize_t w = s.shape[1]

    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] o = out
    cdef Py_ssize_t x, y, ch, x0, y0, x1, y1
    cdef double sx, sy, wx, wy, top, bot

    for y in range(out_h):
        for x in range(out_w):
            sx = a * x + b * y + c
            sy = d * x + e * y + f
            if sx < 0.0 or sx > w - 1.0 or sy < 0.0 or sy > h - 1.0:
                o[y, x, 0] = f0
                o[y, x, 1] = f1
                o[y, x, 2] = f2
                continue
            wx = sx - floor(sx)
            wy = sy - floor(sy)
            x0 = <Py_ssize_t>floor(sx)
            y0 = <Py_ssize_t>floor(sy)
            x1 = x0 + 1 if x0 + 1 < w else w - 1
            y1 = y0 + 1 if y0 + 1 < h else h - 1
            for ch in range(3):
                top = (1.0 - wx) * <double>s[y0, x0, ch] + wx * <double>s[y0, x1, ch]
                bot = (1.0 - wx) * <double>s[y1, x0, ch] + wx * <double>s[y1, x1, ch]
                o[y, x, ch] = <cnp.uint8_t>rint((1.0 - wy) * top + wy * bot)
    return out


def median_reduce(stack):
    """See glean.kernels.pyfallback.median_reduce."""
    stack_arr = np.ascontiguousarray(stack, dtype=np.uint8)
    if stack_arr.ndim != 4:
        raise ValueError("stack must be (N, H, W, C)")
    if stack_arr.shape[0] < 1:
        raise ValueError("stack must contain at least one image")
    cdef const cnp.uint8_t[:, :, :, ::1] st = stack_arr
    cdef Py_ssize_t n = st.shape[0]
    cdef Py_ssize_t h = st.shape[1]
    cdef Py_ssize_t w = st.shape[2]
    cdef Py_ssize_t nc = st.shape[3]

    out = np.empty((h, w, nc), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] o = out
    cdef int counts[256]
    cdef Py_ssize_t y, x, ch, i, v, cum, lo, hi, v1, v2, s2, half
    lo = (n - 1) // 2
    hi = n // 2

    for y in range(h):
        for x in range(w):
            for ch in range(nc):
                memset(counts, 0, sizeof(counts))
                for i in range(n):
                    counts[st[i, y, x, ch]] += 1
                cum = 0
                v1 = -1
                v2 = -1
                for v in range(256):
                    cum += counts[v]
                    if v1 < 0 and cum > lo:
                        v1 = v
                    if cum > hi:
                        v2 = v
                        break
                s2 = v1 + v2
                if s2 & 1:
                    # half-integer average: round half to even
                    half = s2 >> 1
                    o[y, x, ch] = <cnp.uint8_t>(half if (half & 1) == 0 else half + 1)
                else:
                    o[y, x, ch] = <cnp.uint8_t>(s2 >> 1)
    return out
