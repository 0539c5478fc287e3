"""NumPy implementations of the per-pixel kernels.

These are the reference semantics; the compiled extension in `_native.pyx`
mirrors them operation for operation so both backends produce identical
bytes. Keep the expression order in `warp_bilinear` in sync with the
extension: reordering float arithmetic would break bit-equality.
"""

from __future__ import annotations

import numpy as np


def warp_bilinear(src, inv_coeffs, out_h: int, out_w: int, fill) -> np.ndarray:
    """Inverse-mapped bilinear resampling of an RGB raster.

    `inv_coeffs` = (a, b, c, d, e, f) maps output pixel (x, y) to source
    coordinates (a*x + b*y + c, d*x + e*y + f). Samples outside the source
    raster take `fill`. Channel values are rounded half-to-even.
    """
    src = np.ascontiguousarray(src, dtype=np.uint8)
    if src.ndim != 3 or src.shape[2] != 3:
        raise ValueError("source must be an (H, W, 3) raster")
    a, b, c, d, e, f = (float(v) for v in inv_coeffs)
    h, w = src.shape[0], src.shape[1]
    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    sx = a * xs[None, :] + b * ys[:, None] + c
    sy = d * xs[None, :] + e * ys[:, None] + f

    inside = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    wx = sx - x0
    wy = sy - y0
    x0i = np.clip(x0.astype(np.int64), 0, w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, h - 1)
    x1i = np.minimum(x0i + 1, w - 1)
    y1i = np.minimum(y0i + 1, h - 1)

    srcf = src.astype(np.float64)
    p00 = srcf[y0i, x0i]
    p01 = srcf[y0i, x1i]
    p10 = srcf[y1i, x0i]
    p11 = srcf[y1i, x1i]
    wxe = wx[..., None]
    wye = wy[..., None]
    top = (1.0 - wxe) * p00 + wxe * p01
    bot = (1.0 - wxe) * p10 + wxe * p11
    val = np.rint((1.0 - wye) * top + wye * bot)

    fill_arr = np.asarray(fill, dtype=np.float64)
    out = np.where(inside[..., None], val, fill_arr)
    return out.astype(np.uint8)


def median_reduce(stack) -> np.ndarray:
    """Per-pixel, per-channel median of an (N, H, W, C) uint8 stack.

    Odd N takes the middle order statistic; even N averages the two middle
    order statistics and rounds half-to-even.
    """
    stack = np.ascontiguousarray(stack, dtype=np.uint8)
    if stack.ndim != 4:
        raise ValueError("stack must be (N, H, W, C)")
    if stack.shape[0] < 1:
        raise ValueError("stack must contain at least one image")
    return np.rint(np.median(stack, axis=0)).astype(np.uint8)
